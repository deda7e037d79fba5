#pragma once

#include <string>

#include "balloc/table.hpp"

namespace balloc {

enum class PlotScale { kLinear, kLogX, kLogY, kLogLog };

struct PlotSpec {
  std::string x;
  std::string y;
  std::string group;  // optional; one series per distinct value
  PlotScale scale = PlotScale::kLinear;
  std::string out;

  // Either a key=value file or an inline "x=n;y=gap;group=process;scale=log-log;out=a.svg".
  static PlotSpec parse(const std::string& text);
  static PlotSpec load(const std::string& path_or_inline);
  void validate(const Table& table) const;
};

PlotScale parse_scale(const std::string& s);

// Self-contained SVG; byte-identical for identical input. Series points are
// sorted by x; rows with a repeated (group, x) are averaged.
std::string render_svg(const Table& table, const PlotSpec& spec);
void render_svg(const Table& table, const PlotSpec& spec, const std::string& path);

}  // namespace balloc
