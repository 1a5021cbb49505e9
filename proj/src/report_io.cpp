#include "lsda/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace lsda {
namespace {

struct BoxStats {
  double lo, q1, med, q3, hi;
};

BoxStats box_stats(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  auto quantile = [&](double q) {
    const double pos = q * (v.size() - 1);
    const size_t i = static_cast<size_t>(pos);
    const double frac = pos - i;
    return i + 1 < v.size() ? v[i] * (1 - frac) + v[i + 1] * frac : v[i];
  };
  return {v.front(), quantile(0.25), quantile(0.5), quantile(0.75), v.back()};
}

}  // namespace

void write_report_csv(const EvalReport& rep,
                      const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("report: cannot open " + path.string());
  os << "stage,domain,class,dice,n\n";
  os << std::setprecision(6) << std::fixed;
  for (const auto& dom : rep.domains) {
    for (size_t c = 0; c < dom.per_class_dice.size(); ++c)
      os << eval_stage_name(rep.stage) << ',' << dom.domain << ',' << c << ','
         << dom.per_class_dice[c] << ',' << dom.sample_count << '\n';
    os << eval_stage_name(rep.stage) << ',' << dom.domain
       << ",foreground_mean," << dom.mean_foreground_dice << ','
       << dom.sample_count << '\n';
  }
}

void write_boxplot_svg(const EvalReport& rep,
                       const std::filesystem::path& path) {
  const int W = 120 * std::max<int>(1, static_cast<int>(rep.domains.size())) +
                80;
  const int H = 360;
  const double y0 = 40, y1 = 310;  // dice 1.0 at top, 0.0 at bottom
  auto ypix = [&](double dice) { return y1 - dice * (y1 - y0); };

  std::ofstream os(path);
  if (!os) throw FormatError("plot: cannot open " + path.string());
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W
     << "' height='" << H << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  for (double g = 0.0; g <= 1.001; g += 0.25) {
    os << "<line x1='50' x2='" << W - 20 << "' y1='" << ypix(g) << "' y2='"
       << ypix(g) << "' stroke='#ddd'/>\n";
    os << "<text x='8' y='" << ypix(g) + 4 << "' font-size='11'>" << g
       << "</text>\n";
  }
  int i = 0;
  for (const auto& dom : rep.domains) {
    const double cx = 110 + 120.0 * i++;
    if (!dom.per_sample_fg.empty()) {
      const BoxStats b = box_stats(dom.per_sample_fg);
      os << "<line x1='" << cx << "' x2='" << cx << "' y1='" << ypix(b.lo)
         << "' y2='" << ypix(b.hi) << "' stroke='black'/>\n";
      os << "<rect x='" << cx - 30 << "' y='" << ypix(b.q3) << "' width='60'"
         << " height='" << ypix(b.q1) - ypix(b.q3)
         << "' fill='#9bc4e2' stroke='black'/>\n";
      os << "<line x1='" << cx - 30 << "' x2='" << cx + 30 << "' y1='"
         << ypix(b.med) << "' y2='" << ypix(b.med)
         << "' stroke='black' stroke-width='2'/>\n";
    }
    os << "<text x='" << cx << "' y='335' font-size='11' text-anchor='middle'>"
       << dom.domain << "</text>\n";
  }
  os << "</svg>\n";
}

void write_pgm(const std::vector<float>& img, int h, int w,
               const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("pgm: cannot open " + path.string());
  os << "P5\n" << w << " " << h << "\n255\n";
  for (float v : img) {
    const float c = std::clamp(v, 0.f, 1.f);
    os.put(static_cast<char>(std::lround(c * 255.f)));
  }
}

void write_csv_array(const std::vector<float>& v, int c, int h, int w,
                     const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("csv: cannot open " + path.string());
  os << std::setprecision(8);
  for (int ci = 0; ci < c; ++ci)
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j)
        os << (j ? "," : "") << v[(static_cast<size_t>(ci) * h + i) * w + j];
      os << '\n';
    }
}

}  // namespace lsda
