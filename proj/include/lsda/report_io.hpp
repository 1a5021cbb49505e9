#pragma once

#include <filesystem>

#include "lsda/metrics.hpp"

namespace lsda {

// CSV schema: domain,class,dice,n with one summary row per domain
// (class = "foreground_mean").
void write_report_csv(const EvalReport& rep, const std::filesystem::path& path);

// One box (median/quartiles/whiskers) per domain over per-sample
// foreground Dice.
void write_boxplot_svg(const EvalReport& rep, const std::filesystem::path& path);

// Grayscale binary PGM (P5); values clamped to [0,1] then scaled to 255.
void write_pgm(const std::vector<float>& img, int h, int w,
               const std::filesystem::path& path);

// Rectangular CSV dump of a [c,h,w] or [h,w] array, one row per (c,i).
void write_csv_array(const std::vector<float>& v, int c, int h, int w,
                     const std::filesystem::path& path);

}  // namespace lsda
