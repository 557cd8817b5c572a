#include "app/scatter.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdio>
#include <ostream>

namespace smrep::app {

void write_scatter_csv(std::ostream& out, const Evaluation& ev) {
  out << "m1,m2,m3,h1,h2,h3,x,y,Ap1,Ap2,Ap3\n";
  char buf[64];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof buf, "%.9g%c", v, sep);
    out << buf;
  };
  const auto& s = ev.sample;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    put(s.motors[i][0], ',');
    put(s.motors[i][1], ',');
    put(s.motors[i][2], ',');
    for (Eigen::Index c = 0; c < 3; ++c) put(s.representations(r, c), ',');
    put(s.positions(r, 0), ',');
    put(s.positions(r, 1), ',');
    put(ev.aligned_positions(r, 0), ',');
    put(ev.aligned_positions(r, 1), ',');
    put(ev.aligned_positions(r, 2), '\n');
  }
}

void write_scatter_svg(std::ostream& out, const Evaluation& ev) {
  const auto& hs = ev.sample.representations;
  const Eigen::RowVectorXd h_mean = hs.colwise().mean();
  const Eigen::MatrixXd hc = hs.rowwise() - h_mean;
  const Eigen::MatrixXd qc = ev.aligned_positions.rowwise() - ev.aligned_positions.colwise().mean();

  // Principal axes of the representation cloud; eigenvalues come out ascending.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hc.transpose() * hc);
  const Eigen::MatrixXd axes = eig.eigenvectors().rightCols(2).rowwise().reverse();
  const Eigen::MatrixXd h2 = hc * axes;
  const Eigen::MatrixXd q2 = qc * axes;

  double extent = 1e-12;
  extent = std::max({extent, h2.cwiseAbs().maxCoeff(), q2.cwiseAbs().maxCoeff()});
  constexpr double kSize = 600.0;
  constexpr double kPad = 20.0;
  const double scale = (kSize / 2 - kPad) / extent;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" viewBox=\"0 0 600 600\">\n";
  out << "<rect width=\"600\" height=\"600\" fill=\"white\"/>\n";
  char buf[160];
  auto dots = [&](const Eigen::MatrixXd& pts, const char* color) {
    out << "<g fill=\"" << color << "\" fill-opacity=\"0.6\">\n";
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2\"/>\n", kSize / 2 + scale * pts(i, 0),
                    kSize / 2 - scale * pts(i, 1));
      out << buf;
    }
    out << "</g>\n";
  };
  dots(q2, "#d62728");
  dots(h2, "#1f77b4");
  out << "<text x=\"10\" y=\"20\" font-size=\"12\" fill=\"#1f77b4\">h (principal axes)</text>\n";
  out << "<text x=\"10\" y=\"36\" font-size=\"12\" fill=\"#d62728\">A p (same axes)</text>\n";
  out << "</svg>\n";
}

}  // namespace smrep::app
