// Copyright (c) the aclab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "aclab/experiments.hpp"

namespace aclab {
namespace detail {

/// Shortest decimal rendering that round-trips through IEEE-754 binary64.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string csv_sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return s;
}

/// One CSV cell from a JSON value; missing/null renders empty.
inline std::string csv_cell(const json& row, const char* key) {
  if (!row.contains(key) || row[key].is_null()) return "";
  const json& v = row[key];
  if (v.is_number_float()) return num(v.get<double>());
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_string()) return csv_sanitize(v.get<std::string>());
  return csv_sanitize(v.dump());
}

inline std::string csv_table(const std::vector<const char*>& header,
                             const std::vector<const char*>& keys, const json& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  if (rows.is_array())
    for (const json& row : rows) {
      for (std::size_t i = 0; i < keys.size(); ++i) {
        if (i) out += ',';
        out += csv_cell(row, keys[i]);
      }
      out += '\n';
    }
  return out;
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

// --- minimal deterministic SVG plotting ------------------------------------

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

/// A fixed-size xy frame with linear axes; data outside the range is clamped
/// by construction of the range. An empty range renders bare axes.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string xlabel, std::string ylabel)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

  void include(double x, double y) {
    xmin_ = std::min(xmin_, x);
    xmax_ = std::max(xmax_, x);
    ymin_ = std::min(ymin_, y);
    ymax_ = std::max(ymax_, y);
    has_data_ = true;
  }

  void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                const char* color) {
    if (xs.size() < 2) {
      points(xs, ys, color);
      return;
    }
    std::string p = "  <polyline fill=\"none\" stroke=\"";
    p += color;
    p += "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) p += ' ';
      p += svg_num(px(xs[i])) + "," + svg_num(py(ys[i]));
    }
    p += "\"/>\n";
    body_ += p;
  }

  void points(const std::vector<double>& xs, const std::vector<double>& ys,
              const char* color) {
    for (std::size_t i = 0; i < xs.size(); ++i)
      body_ += "  <circle cx=\"" + svg_num(px(xs[i])) + "\" cy=\"" + svg_num(py(ys[i])) +
               "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
  }

  void vline(double x, const char* color) {
    if (x < xmin_ || x > xmax_) return;
    body_ += "  <line x1=\"" + svg_num(px(x)) + "\" y1=\"" + svg_num(py(ymax_)) + "\" x2=\"" +
             svg_num(px(x)) + "\" y2=\"" + svg_num(py(ymin_)) + "\" stroke=\"" + color +
             "\" stroke-width=\"1\" stroke-dasharray=\"4,3\"/>\n";
  }

  std::string render() const {
    if (!has_data_) {
      SvgPlot empty = *this;
      empty.xmin_ = 0.0;
      empty.xmax_ = 1.0;
      empty.ymin_ = 0.0;
      empty.ymax_ = 1.0;
      empty.has_data_ = true;
      return empty.render();
    }
    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
         "viewBox=\"0 0 640 420\">\n";
    s += "  <rect x=\"0\" y=\"0\" width=\"640\" height=\"420\" fill=\"white\"/>\n";
    s += "  <text x=\"320\" y=\"24\" font-size=\"14\" font-family=\"sans-serif\" "
         "text-anchor=\"middle\">" + title_ + "</text>\n";
    // frame
    s += "  <rect x=\"" + svg_num(kL) + "\" y=\"" + svg_num(kT) + "\" width=\"" +
         svg_num(kR - kL) + "\" height=\"" + svg_num(kB - kT) +
         "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double fx = xmin_ + (xmax_ - xmin_) * i / 4.0;
      const double fy = ymin_ + (ymax_ - ymin_) * i / 4.0;
      const double X = kL + (kR - kL) * i / 4.0;
      const double Y = kB - (kB - kT) * i / 4.0;
      s += "  <line x1=\"" + svg_num(X) + "\" y1=\"" + svg_num(kB) + "\" x2=\"" + svg_num(X) +
           "\" y2=\"" + svg_num(kB + 4) + "\" stroke=\"black\"/>\n";
      s += "  <text x=\"" + svg_num(X) + "\" y=\"" + svg_num(kB + 18) +
           "\" font-size=\"10\" font-family=\"sans-serif\" text-anchor=\"middle\">" +
           tick_label(fx) + "</text>\n";
      s += "  <line x1=\"" + svg_num(kL - 4) + "\" y1=\"" + svg_num(Y) + "\" x2=\"" +
           svg_num(kL) + "\" y2=\"" + svg_num(Y) + "\" stroke=\"black\"/>\n";
      s += "  <text x=\"" + svg_num(kL - 7) + "\" y=\"" + svg_num(Y + 3) +
           "\" font-size=\"10\" font-family=\"sans-serif\" text-anchor=\"end\">" +
           tick_label(fy) + "</text>\n";
    }
    s += "  <text x=\"" + svg_num(0.5 * (kL + kR)) +
         "\" y=\"410\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\">" +
         xlabel_ + "</text>\n";
    s += "  <text x=\"16\" y=\"" + svg_num(0.5 * (kT + kB)) +
         "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 16 " + svg_num(0.5 * (kT + kB)) + ")\">" + ylabel_ +
         "</text>\n";
    s += body_;
    s += "</svg>\n";
    return s;
  }

 private:
  static constexpr double kL = 70.0, kR = 620.0, kT = 40.0, kB = 370.0;

  double px(double x) const {
    const double span = xmax_ > xmin_ ? xmax_ - xmin_ : 1.0;
    return kL + (x - xmin_) / span * (kR - kL);
  }
  double py(double y) const {
    const double span = ymax_ > ymin_ ? ymax_ - ymin_ : 1.0;
    return kB - (y - ymin_) / span * (kB - kT);
  }

  std::string title_, xlabel_, ylabel_, body_;
  double xmin_ = std::numeric_limits<double>::infinity();
  double xmax_ = -std::numeric_limits<double>::infinity();
  double ymin_ = std::numeric_limits<double>::infinity();
  double ymax_ = -std::numeric_limits<double>::infinity();
  bool has_data_ = false;
};

/// Heatmap of a row-major n x n value grid with a symmetric diverging scale.
inline std::string svg_heatmap(const json& values, int n, const std::string& title) {
  double amp = 0.0;
  for (const json& v : values) amp = std::max(amp, std::abs(v.get<double>()));
  if (amp == 0.0) amp = 1.0;
  const double cell = 480.0 / n;
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"520\" height=\"560\" "
       "viewBox=\"0 0 520 560\">\n";
  s += "  <rect x=\"0\" y=\"0\" width=\"520\" height=\"560\" fill=\"white\"/>\n";
  s += "  <text x=\"260\" y=\"24\" font-size=\"14\" font-family=\"sans-serif\" "
       "text-anchor=\"middle\">" + title + "</text>\n";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double v = values[static_cast<std::size_t>(i * n + j)].get<double>();
      const double t = 0.5 * (v / amp + 1.0);  // 0 = -amp, 1 = +amp
      const int r = static_cast<int>(std::lround(255.0 * std::min(1.0, 2.0 * t)));
      const int b = static_cast<int>(std::lround(255.0 * std::min(1.0, 2.0 * (1.0 - t))));
      const int g = static_cast<int>(std::lround(255.0 * (1.0 - 2.0 * std::abs(t - 0.5))));
      char color[8];
      std::snprintf(color, sizeof(color), "#%02x%02x%02x", r, g, b);
      s += "  <rect x=\"" + svg_num(20.0 + j * cell) + "\" y=\"" + svg_num(40.0 + i * cell) +
           "\" width=\"" + svg_num(cell + 0.5) + "\" height=\"" + svg_num(cell + 0.5) +
           "\" fill=\"" + color + "\"/>\n";
    }
  s += "  <text x=\"260\" y=\"545\" font-size=\"11\" font-family=\"sans-serif\" "
       "text-anchor=\"middle\">range ±" + tick_label(amp) + "</text>\n";
  s += "</svg>\n";
  return s;
}

inline double log10_floor(double v) {
  return std::log10(std::max(v, 1e-18));
}

}  // namespace detail

/// Paths of the files written by one emission.
struct EmitResult {
  std::vector<std::string> files;
};

/// Writes the requested formats for a run record into out_dir:
///   doc    -> result.json (the deterministic result document)
///   table  -> checks.csv plus kind-specific flat tables
///   plots  -> kind-specific SVG figures
inline EmitResult emit_report(const RunRecord& rec, const std::string& out_dir,
                              const std::vector<std::string>& formats) {
  bool want_doc = false, want_table = false, want_plots = false;
  for (const std::string& f : formats) {
    if (f == "doc")
      want_doc = true;
    else if (f == "table")
      want_table = true;
    else if (f == "plots")
      want_plots = true;
    else
      throw std::runtime_error("unknown output format '" + f + "'");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out_dir + ": " +
                                   ec.message());

  EmitResult out;
  const auto put = [&](const std::string& name, const std::string& content) {
    const std::string path = out_dir + "/" + name;
    detail::write_text(path, content);
    out.files.push_back(path);
  };

  if (want_doc) put("result.json", rec.doc.dump(2) + "\n");

  const std::string kind = rec.doc.value("kind", "");
  const json empty = json::object();
  const json& res = rec.doc.contains("results") ? rec.doc["results"] : empty;

  if (want_table) {
    if (rec.doc.contains("checks"))
      put("checks.csv", detail::csv_table({"name", "pass", "detail"},
                                          {"name", "pass", "detail"}, rec.doc["checks"]));
    if (kind == "solve" || kind == "census") {
      json rows = json::array();
      if (kind == "solve" && res.contains("solution")) {
        json row = res["solution"];
        if (res.contains("degeneracy")) {
          row["sigma_min"] = res["degeneracy"]["sigma_min"];
          row["sigma_ratio"] = res["degeneracy"]["sigma_ratio"];
          row["kernel_dimension"] = res["degeneracy"]["kernel_dimension"];
          row["class"] = res["degeneracy"]["classification"];
        }
        rows.push_back(std::move(row));
      }
      if (kind == "census" && res.contains("distinct"))
        for (const json& d : res["distinct"]) {
          json row = d;
          if (d.contains("degeneracy")) {
            row["sigma_min"] = d["degeneracy"]["sigma_min"];
            row["sigma_ratio"] = d["degeneracy"]["sigma_ratio"];
            row["kernel_dimension"] = d["degeneracy"]["kernel_dimension"];
            row["class"] = d["degeneracy"]["classification"];
          }
          rows.push_back(std::move(row));
        }
      const char* name = kind == "solve" ? "solution.csv" : "census.csv";
      std::vector<const char*> header{"eps",  "nu",   "lambda",        "residual",
                                      "mass", "energy", "sigma_min",   "sigma_ratio",
                                      "kernel_dimension", "class"};
      std::vector<const char*> keys = header;
      if (kind == "census") {
        header.insert(header.begin(), "tag");
        keys.insert(keys.begin(), "tag");
        header.push_back("hits");
        keys.push_back("hits");
      }
      put(name, detail::csv_table(header, keys, rows));
    } else if (kind == "sweep") {
      json rows = json::array();
      if (res.contains("rows"))
        for (const json& r : res["rows"]) {
          json row = r;
          row["class"] = r.contains("classification") ? r["classification"]
                         : r.contains("error")        ? json("error")
                                                      : json("");
          rows.push_back(std::move(row));
        }
      put("sweep_rows.csv",
          detail::csv_table({"eps", "lambda", "residual", "sigma_min", "class"},
                            {"eps", "lambda", "residual", "sigma_min", "class"}, rows));
      if (res.contains("dips"))
        put("sweep_dips.csv",
            detail::csv_table({"eps_fit", "eps_refined", "sigma_refined", "kernel_dimension",
                               "classification", "nearest_prediction", "relative_mismatch"},
                              {"eps_fit", "eps_refined", "sigma_refined", "kernel_dimension",
                               "classification", "nearest_prediction", "relative_mismatch"},
                              res["dips"]));
      if (res.contains("predictions"))
        put("sweep_predictions.csv",
            detail::csv_table({"eps", "eigenvalue", "multiplicity"},
                              {"eps", "eigenvalue", "multiplicity"}, res["predictions"]));
    } else if (kind == "degenerate-eps") {
      if (res.contains("predictions"))
        put("predictions.csv",
            detail::csv_table({"j", "eps", "eigenvalue", "multiplicity"},
                              {"j", "eps", "eigenvalue", "multiplicity"}, res["predictions"]));
    } else if (kind == "check-calculus") {
      json rows = json::array();
      if (res.contains("formulas"))
        for (const auto& [name, stats] : res["formulas"].items()) {
          json row = stats;
          row["formula"] = name;
          rows.push_back(std::move(row));
        }
      put("calculus.csv",
          detail::csv_table({"formula", "worst_relative_error", "median_order", "order_samples"},
                            {"formula", "worst_relative_error", "median_order", "order_samples"},
                            rows));
    } else if (kind == "probe-generic") {
      if (res.contains("density") && res["density"].contains("rows"))
        put("probe_density.csv",
            detail::csv_table({"eps", "sigma_ratio", "classification", "flagged"},
                              {"eps", "sigma_ratio", "classification", "flagged"},
                              res["density"]["rows"]));
      if (res.contains("openness") && res["openness"].contains("rows"))
        put("probe_openness.csv",
            detail::csv_table({"eps_star", "at_star", "below", "above", "ok"},
                              {"eps_star", "at_star", "below", "above", "ok"},
                              res["openness"]["rows"]));
      if (res.contains("symmetry") && res["symmetry"].contains("flat")) {
        json rows = json::array();
        for (const char* which : {"flat", "perturbed"}) {
          json row = res["symmetry"][which];
          row["case"] = which;
          rows.push_back(std::move(row));
        }
        put("probe_symmetry.csv",
            detail::csv_table({"case", "lambda", "residual", "sigma_ratio"},
                              {"case", "lambda", "residual", "sigma_ratio"}, rows));
      }
    } else if (kind == "oracle1d") {
      json rows = json::array();
      if (res.value("found", false) && res.contains("values")) {
        const double period = res.value("period", 1.0);
        const auto& vals = res["values"];
        for (std::size_t j = 0; j < vals.size(); ++j)
          rows.push_back(json{{"x", period * static_cast<double>(j) /
                                        static_cast<double>(vals.size())},
                              {"u", vals[j]}});
      }
      put("profile.csv", detail::csv_table({"x", "u"}, {"x", "u"}, rows));
    }
  }

  if (want_plots) {
    if (kind == "sweep") {
      detail::SvgPlot sig("smallest singular value vs eps", "eps", "log10 sigma_min");
      detail::SvgPlot lam("multiplier branch", "eps", "lambda");
      std::vector<double> xs, ys, lx, ly;
      if (res.contains("rows"))
        for (const json& r : res["rows"]) {
          if (!r.contains("sigma_min")) continue;
          xs.push_back(r["eps"].get<double>());
          ys.push_back(detail::log10_floor(r["sigma_min"].get<double>()));
          lx.push_back(r["eps"].get<double>());
          ly.push_back(r["lambda"].get<double>());
        }
      for (std::size_t i = 0; i < xs.size(); ++i) sig.include(xs[i], ys[i]);
      for (std::size_t i = 0; i < lx.size(); ++i) lam.include(lx[i], ly[i]);
      sig.polyline(xs, ys, "#1f77b4");
      lam.polyline(lx, ly, "#1f77b4");
      if (res.contains("predictions"))
        for (const json& p : res["predictions"]) sig.vline(p["eps"].get<double>(), "#d62728");
      put("sigma_vs_eps.svg", sig.render());
      put("lambda_vs_eps.svg", lam.render());
    } else if (kind == "solve") {
      if (res.contains("solution") && res["solution"].contains("values") &&
          res["solution"]["shape"].size() == 2)
        put("solution.svg",
            detail::svg_heatmap(res["solution"]["values"],
                                res["solution"]["shape"][0].get<int>(), "solution"));
    } else if (kind == "census") {
      int count = 0;
      if (res.contains("distinct"))
        for (const json& d : res["distinct"]) {
          if (count >= 8) break;
          if (!d.contains("values") || d["shape"].size() != 2) continue;
          put("census_" + std::to_string(count) + ".svg",
              detail::svg_heatmap(d["values"], d["shape"][0].get<int>(),
                                  "census solution " + std::to_string(count) + " (" +
                                      d.value("tag", "") + ")"));
          ++count;
        }
    } else if (kind == "oracle1d") {
      detail::SvgPlot prof("1d profile", "x", "u");
      std::vector<double> xs, ys;
      if (res.value("found", false) && res.contains("values")) {
        const double period = res.value("period", 1.0);
        const auto& vals = res["values"];
        for (std::size_t j = 0; j < vals.size(); ++j) {
          xs.push_back(period * static_cast<double>(j) / static_cast<double>(vals.size()));
          ys.push_back(vals[j].get<double>());
        }
      }
      for (std::size_t i = 0; i < xs.size(); ++i) prof.include(xs[i], ys[i]);
      prof.polyline(xs, ys, "#1f77b4");
      put("profile.svg", prof.render());
    } else if (kind == "probe-generic") {
      detail::SvgPlot sc("constant-branch degeneracy scan", "eps", "log10 sigma ratio");
      std::vector<double> xs, ys;
      if (res.contains("density") && res["density"].contains("rows"))
        for (const json& r : res["density"]["rows"]) {
          xs.push_back(r["eps"].get<double>());
          ys.push_back(detail::log10_floor(r["sigma_ratio"].get<double>()));
        }
      for (std::size_t i = 0; i < xs.size(); ++i) sc.include(xs[i], ys[i]);
      sc.points(xs, ys, "#1f77b4");
      put("probe_density.svg", sc.render());
    } else if (kind == "degenerate-eps") {
      detail::SvgPlot pr("predicted degenerate eps", "eps", "multiplicity");
      std::vector<double> xs, ys;
      if (res.contains("predictions"))
        for (const json& p : res["predictions"]) {
          xs.push_back(p["eps"].get<double>());
          ys.push_back(static_cast<double>(p["multiplicity"].get<int>()));
        }
      for (std::size_t i = 0; i < xs.size(); ++i) pr.include(xs[i], ys[i]);
      pr.include(0.0, 0.0);
      pr.points(xs, ys, "#d62728");
      for (double x : xs) pr.vline(x, "#d62728");
      put("predictions.svg", pr.render());
    } else if (kind == "check-calculus") {
      detail::SvgPlot er("worst relative error per formula", "formula index",
                         "log10 relative error");
      std::vector<double> xs, ys;
      if (res.contains("formulas")) {
        double idx = 0.0;
        for (const auto& [name, stats] : res["formulas"].items()) {
          (void)name;
          xs.push_back(idx++);
          ys.push_back(detail::log10_floor(stats["worst_relative_error"].get<double>()));
        }
      }
      for (std::size_t i = 0; i < xs.size(); ++i) er.include(xs[i], ys[i]);
      er.include(0.0, -6.0);  // always show the pass threshold
      er.points(xs, ys, "#1f77b4");
      put("calculus_errors.svg", er.render());
    }
  }
  return out;
}

/// Reads a previously written result document back into a RunRecord so the
/// report subcommand can re-emit tables and plots from it.
inline RunRecord load_record(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open record: " + path);
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::exception& e) {
    throw std::runtime_error("cannot parse record " + path + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("schema_version") || !doc.contains("kind"))
    throw std::runtime_error("record " + path + " is not a result document");
  if (doc["schema_version"].get<int>() != kSchemaVersion)
    throw std::runtime_error("record " + path + " has unsupported schema_version");
  RunRecord rec;
  rec.doc = std::move(doc);
  if (rec.doc.contains("checks"))
    for (const json& c : rec.doc["checks"])
      rec.checks.push_back(
          {c.value("name", ""), c.value("pass", false), c.value("detail", "")});
  return rec;
}

}  // namespace aclab
