#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gffil {

// Result record of one operation: {op, params, value, error, seed}.
nlohmann::json result_record(const std::string& op, const nlohmann::json& params,
                             const nlohmann::json& value, double error,
                             std::uint64_t seed);

void write_json(const nlohmann::json& j, const std::string& path);

// curve CSV (abscissa, estimate, stderr)
void write_curve_csv(const std::string& path,
                     const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

// minimal line/scatter plot
struct SvgSeries {
  std::vector<double> x, y;
  std::string color = "#1f6fb2";
};

void write_svg_plot(const std::string& path, const std::vector<SvgSeries>& series,
                    const std::string& title, bool logx = false,
                    bool logy = false);

}  // namespace gffil
