#include "turnpike/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace turnpike {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& M) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty())
        throw IoError(what + ": expected a non-empty array of rows");
    const std::size_t rows = j.size();
    std::size_t cols = 0;
    Matrix M;
    for (std::size_t r = 0; r < rows; ++r) {
        const json& row = j[r];
        if (!row.is_array() || row.empty())
            throw IoError(what + ": row " + std::to_string(r) + " is not a non-empty array");
        if (r == 0) {
            cols = row.size();
            M.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        } else if (row.size() != cols) {
            throw IoError(what + ": ragged rows");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            if (!row[c].is_number())
                throw IoError(what + ": non-numeric entry");
            M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                row[c].get<double>();
        }
    }
    if (!M.allFinite()) throw IoError(what + ": non-finite entry");
    return M;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace

Ensemble read_ensemble_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open ensemble file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("ensemble file " + path.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("samples") || !j["samples"].is_array())
        throw IoError("ensemble file " + path.string() + ": expected {n,m,p,samples:[...]}");

    std::vector<ParameterSample> samples;
    for (std::size_t i = 0; i < j["samples"].size(); ++i) {
        const json& sj = j["samples"][i];
        const std::string tag = "sample " + std::to_string(i);
        if (!sj.is_object() || !sj.contains("weight") || !sj["weight"].is_number())
            throw IoError("ensemble file: " + tag + " needs a numeric weight");
        ParameterSample s;
        s.weight = sj["weight"].get<double>();
        s.A = matrix_from_json(sj.value("A", json()), tag + " A");
        s.B = matrix_from_json(sj.value("B", json()), tag + " B");
        s.C = matrix_from_json(sj.value("C", json()), tag + " C");
        samples.push_back(std::move(s));
    }
    Ensemble ens = make_ensemble(std::move(samples));
    if (j.contains("n") && j["n"].get<Eigen::Index>() != ens.n)
        throw IoError("ensemble file: declared n disagrees with matrices");
    if (j.contains("m") && j["m"].get<Eigen::Index>() != ens.m)
        throw IoError("ensemble file: declared m disagrees with matrices");
    if (j.contains("p") && j["p"].get<Eigen::Index>() != ens.p)
        throw IoError("ensemble file: declared p disagrees with matrices");
    return ens;
}

void write_ensemble_json(const Ensemble& ens, const std::filesystem::path& path) {
    json j;
    j["n"] = ens.n;
    j["m"] = ens.m;
    j["p"] = ens.p;
    j["samples"] = json::array();
    for (const ParameterSample& s : ens.samples) {
        json sj;
        sj["weight"] = s.weight;
        sj["A"] = matrix_to_json(s.A);
        sj["B"] = matrix_to_json(s.B);
        sj["C"] = matrix_to_json(s.C);
        j["samples"].push_back(std::move(sj));
    }
    write_text(path, j.dump(2) + "\n");
}

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const CsvTable& table, const std::filesystem::path& path) {
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out += ',';
        out += table.columns[c];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            throw IoError("csv: row width does not match header");
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += format_value(row[c]);
        }
        out += '\n';
    }
    write_text(path, out);
}

// ---------------------------------------------------------------------------
// SVG plotting
// ---------------------------------------------------------------------------

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[48];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += ch;
        }
    }
    return out;
}

} // namespace

void write_svg_plot(const std::vector<LineSeries>& series, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::filesystem::path& path) {
    const double width = 880, height = 560;
    const double left = 72, right = 860, top = 48, bottom = 500;

    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (const auto& s : series) {
        for (double v : s.x) {
            x_min = std::min(x_min, v);
            x_max = std::max(x_max, v);
        }
        for (double v : s.y) {
            y_min = std::min(y_min, v);
            y_max = std::max(y_max, v);
        }
    }
    if (!std::isfinite(x_min)) {
        x_min = 0;
        x_max = 1;
        y_min = 0;
        y_max = 1;
    }
    if (x_max - x_min <= 0) x_max = x_min + 1;
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;
    if (y_max - y_min <= 0) {
        y_min -= 0.5;
        y_max += 0.5;
    }

    const auto px = [&](double x) {
        return left + (x - x_min) / (x_max - x_min) * (right - left);
    };
    const auto py = [&](double y) {
        return bottom - (y - y_min) / (y_max - y_min) * (bottom - top);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) +
           "\" height=\"" + fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " +
           fmt(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt((left + right) / 2) + "\" y=\"24\" font-size=\"16\" "
           "font-family=\"sans-serif\" text-anchor=\"middle\">" +
           escape_xml(title) + "</text>\n";

    // axes
    svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(bottom) + "\" x2=\"" + fmt(right) +
           "\" y2=\"" + fmt(bottom) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(top) + "\" x2=\"" + fmt(left) +
           "\" y2=\"" + fmt(bottom) + "\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 5; ++i) {
        const double fx = x_min + (x_max - x_min) * i / 5.0;
        const double fy = y_min + (y_max - y_min) * i / 5.0;
        svg += "<line x1=\"" + fmt(px(fx)) + "\" y1=\"" + fmt(bottom) + "\" x2=\"" +
               fmt(px(fx)) + "\" y2=\"" + fmt(bottom + 5) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + fmt(px(fx)) + "\" y=\"" + fmt(bottom + 20) +
               "\" font-size=\"11\" font-family=\"sans-serif\" text-anchor=\"middle\">" +
               fmt(fx, "%.4g") + "</text>\n";
        svg += "<line x1=\"" + fmt(left - 5) + "\" y1=\"" + fmt(py(fy)) + "\" x2=\"" +
               fmt(left) + "\" y2=\"" + fmt(py(fy)) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + fmt(left - 8) + "\" y=\"" + fmt(py(fy) + 4) +
               "\" font-size=\"11\" font-family=\"sans-serif\" text-anchor=\"end\">" +
               fmt(fy, "%.4g") + "</text>\n";
    }
    svg += "<text x=\"" + fmt((left + right) / 2) + "\" y=\"" + fmt(height - 16) +
           "\" font-size=\"13\" font-family=\"sans-serif\" text-anchor=\"middle\">" +
           escape_xml(x_label) + "</text>\n";
    svg += "<text x=\"18\" y=\"" + fmt((top + bottom) / 2) +
           "\" font-size=\"13\" font-family=\"sans-serif\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 18 " +
           fmt((top + bottom) / 2) + ")\">" + escape_xml(y_label) + "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        std::string points;
        for (std::size_t k = 0; k < series[s].x.size(); ++k) {
            if (k) points += ' ';
            points += fmt(px(series[s].x[k]), "%.3f") + "," + fmt(py(series[s].y[k]), "%.3f");
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    }

    // legend
    double ly = top + 8;
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        svg += "<line x1=\"" + fmt(right - 170) + "\" y1=\"" + fmt(ly) + "\" x2=\"" +
               fmt(right - 140) + "\" y2=\"" + fmt(ly) + "\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + fmt(right - 134) + "\" y=\"" + fmt(ly + 4) +
               "\" font-size=\"12\" font-family=\"sans-serif\">" +
               escape_xml(series[s].label) + "</text>\n";
        ly += 18;
    }
    svg += "</svg>\n";
    write_text(path, svg);
}

} // namespace turnpike
