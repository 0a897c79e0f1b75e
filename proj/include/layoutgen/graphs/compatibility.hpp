#pragma once

#include "layoutgen/graphs/diagram.hpp"

namespace layoutgen::graphs {

/// Edit count between an input diagram and one read back from its masks,
/// with node identity given by ids. Each missing or spurious room costs 1
/// ("outside" is not a room and is ignored). Each door costs 1 when it is
/// missing, spurious, attached to the wrong rooms, or has the wrong type.
int compatibility_distance(const BubbleDiagram& d_in, const BubbleDiagram& d_out);

}  // namespace layoutgen::graphs
