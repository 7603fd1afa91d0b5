#pragma once

#include <string>
#include <vector>

namespace dfsmem::cli {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = true;
};

/// Minimal standalone SVG line plot.
void write_svg(const std::string& path, const std::string& title, const std::string& x_label,
               const std::string& y_label, const std::vector<Series>& series);

}  // namespace dfsmem::cli
