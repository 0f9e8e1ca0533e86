#include "gffil/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace gffil {

nlohmann::json result_record(const std::string& op, const nlohmann::json& params,
                             const nlohmann::json& value, double error,
                             std::uint64_t seed) {
  nlohmann::json j;
  j["op"] = op;
  j["params"] = params;
  j["value"] = value;
  j["error"] = error;
  j["seed"] = seed;
  return j;
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << j.dump(2) << "\n";
}

void write_curve_csv(const std::string& path,
                     const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  for (std::size_t i = 0; i < header.size(); ++i)
    std::fprintf(f, "%s%s", header[i].c_str(),
                 i + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size(); ++i)
      std::fprintf(f, "%.17g%s", row[i], i + 1 < row.size() ? "," : "\n");
  std::fclose(f);
}

void write_svg_plot(const std::string& path, const std::vector<SvgSeries>& series,
                    const std::string& title, bool logx, bool logy) {
  const int w = 640, h = 420, ml = 60, mr = 20, mt = 40, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  auto tx = [&](double v) { return logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return logy ? std::log10(v) : v; };
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, tx(s.x[i]));
      xmax = std::max(xmax, tx(s.x[i]));
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  auto px = [&](double v) {
    return ml + (tx(v) - xmin) / (xmax - xmin) * (w - ml - mr);
  };
  auto py = [&](double v) {
    return h - mb - (ty(v) - ymin) / (ymax - ymin) * (h - mt - mb);
  };

  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fprintf(f,
               "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" "
               "height=\"%d\" viewBox=\"0 0 %d %d\">\n",
               w, h, w, h);
  std::fprintf(f, "<rect width=\"%d\" height=\"%d\" fill=\"white\"/>\n", w, h);
  std::fprintf(f,
               "<text x=\"%d\" y=\"24\" font-family=\"sans-serif\" "
               "font-size=\"15\">%s</text>\n",
               ml, title.c_str());
  std::fprintf(f,
               "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" "
               "stroke=\"black\"/>\n",
               ml, h - mb, w - mr, h - mb);
  std::fprintf(f,
               "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" "
               "stroke=\"black\"/>\n",
               ml, mt, ml, h - mb);
  for (const auto& s : series) {
    std::fprintf(f, "<polyline fill=\"none\" stroke=\"%s\" points=\"",
                 s.color.c_str());
    for (std::size_t i = 0; i < s.x.size(); ++i)
      std::fprintf(f, "%.2f,%.2f ", px(s.x[i]), py(s.y[i]));
    std::fprintf(f, "\"/>\n");
    for (std::size_t i = 0; i < s.x.size(); ++i)
      std::fprintf(f, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n",
                   px(s.x[i]), py(s.y[i]), s.color.c_str());
  }
  std::fprintf(f, "</svg>\n");
  std::fclose(f);
}

}  // namespace gffil
