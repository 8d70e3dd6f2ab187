#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "contact_kam/errors.hpp"
#include "contact_kam/io.hpp"

namespace contact_kam::cli {

namespace {

constexpr double W = 720.0, Hgt = 480.0, M = 48.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

void write_phase_svg(const std::filesystem::path& path, const ContactModel& model, const std::vector<SvgCurve>& curves,
                     const std::vector<PhasePoint>& markers) {
  const double pi = std::numbers::pi;
  double umin = -1.0, umax = 1.0;
  for (const auto& c : curves)
    for (const auto& z : c.orbit->z)
      if (std::abs(z.u) < 5.0) {
        umin = std::min(umin, z.u);
        umax = std::max(umax, z.u);
      }
  for (const auto& m : markers) {
    umin = std::min(umin, m.u);
    umax = std::max(umax, m.u);
  }
  const double pad = 0.05 * (umax - umin);
  umin -= pad;
  umax += pad;
  auto sx = [&](double x) { return M + (x + pi) / (2.0 * pi) * (W - 2.0 * M); };
  auto sy = [&](double u) { return Hgt - M - (u - umin) / (umax - umin) * (Hgt - 2.0 * M); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hgt << "\" viewBox=\"0 0 " << W << ' ' << Hgt
    << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M << "\" height=\"" << Hgt - 2 * M
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"" << Hgt - 12 << "\" font-size=\"14\" text-anchor=\"middle\">x</text>\n";
  s << "<text x=\"14\" y=\"" << Hgt / 2 << "\" font-size=\"14\">u</text>\n";
  s << "<text x=\"" << M << "\" y=\"" << M - 6 << "\" font-size=\"11\">u in [" << num(umin) << ", " << num(umax)
    << "], x in [-pi, pi); grey: H(x,u,0)=0</text>\n";

  // Fold curve of the zero energy shell: sign changes of H(x, ., 0) per column.
  const int cols = 360, rows = 360;
  s << "<g fill=\"#999999\">\n";
  for (int i = 0; i < cols; ++i) {
    const double x = -pi + (i + 0.5) * 2.0 * pi / cols;
    double prev = 0.0;
    for (int k = 0; k <= rows; ++k) {
      const double u = umin + (umax - umin) * k / rows;
      double h;
      try {
        h = model.hamiltonian(x, u, 0.0);
      } catch (const DomainError&) {
        continue;
      }
      if (k > 0 && (prev <= 0.0) != (h <= 0.0)) {
        const double uc = u - (umax - umin) / rows * h / (h - prev);
        s << "<circle cx=\"" << num(sx(x)) << "\" cy=\"" << num(sy(uc)) << "\" r=\"0.8\"/>\n";
      }
      prev = h;
    }
  }
  s << "</g>\n";

  int row = 0;
  for (const auto& c : curves) {
    s << "<polyline fill=\"none\" stroke=\"" << c.color << "\" stroke-width=\"1.5\" points=\"";
    const Orbit& o = *c.orbit;
    for (std::size_t k = 0; k < o.size(); ++k) {
      const PhasePoint& z = o.z[k];
      if (std::abs(z.u) > 5.0) continue;
      if (k > 0 && std::abs(z.x - o.z[k - 1].x) > pi) s << "\"/>\n<polyline fill=\"none\" stroke=\"" << c.color << "\" stroke-width=\"1.5\" points=\"";
      s << num(sx(z.x)) << ',' << num(sy(z.u)) << ' ';
    }
    s << "\"/>\n";
    s << "<text x=\"" << W - M - 4 << "\" y=\"" << M + 16 + 14 * row++ << "\" font-size=\"11\" text-anchor=\"end\" fill=\"" << c.color
      << "\">" << c.label << "</text>\n";
  }
  for (const auto& m : markers)
    s << "<circle cx=\"" << num(sx(m.x)) << "\" cy=\"" << num(sy(m.u)) << "\" r=\"4\" fill=\"black\"/>\n";
  s << "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << s.str();
}

}  // namespace contact_kam::cli
