#pragma once

#include <iosfwd>

#include "smrep/metrics.hpp"

namespace smrep::app {

/// m1,m2,m3,h1,h2,h3,x,y,Ap1,Ap2,Ap3 per grid point.
void write_scatter_csv(std::ostream& out, const Evaluation& ev);

/// Minimal SVG: representations projected on their two principal axes (blue) with the
/// aligned positions projected on the same axes (red). Both sets are centred.
void write_scatter_svg(std::ostream& out, const Evaluation& ev);

}  // namespace smrep::app
