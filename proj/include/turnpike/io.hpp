#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "turnpike/ensemble.hpp"

namespace turnpike {

// Ensemble file format:
// {"n":..,"m":..,"p":..,"samples":[{"weight":..,"A":[[..]],"B":[[..]],"C":[[..]]}]}
Ensemble read_ensemble_json(const std::filesystem::path& path);
void write_ensemble_json(const Ensemble& ens, const std::filesystem::path& path);

// 17 significant digits; round-trips doubles exactly.
std::string format_value(double v);

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

// Fixed column order, comma separated, '\n' line endings; header always written.
void write_csv(const CsvTable& table, const std::filesystem::path& path);

struct LineSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Self-contained SVG line chart (axes, ticks, legend, polylines); output bytes
// are a deterministic function of the inputs.
void write_svg_plot(const std::vector<LineSeries>& series, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::filesystem::path& path);

} // namespace turnpike
