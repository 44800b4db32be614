#include "mlsent/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "mlsent/error.hpp"

namespace mlsent::limex {

using nlohmann::json;

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

double max_abs(const Explanation& ex) {
  double m = 0.0;
  for (const auto& a : ex.attributions) m = std::max(m, std::abs(a.weight));
  return m;
}

// Attributions ordered by position for inline highlighting.
std::vector<const Attribution*> by_position(const Explanation& ex) {
  std::vector<const Attribution*> v;
  for (const auto& a : ex.attributions) {
    if (a.weight != 0.0 && a.end <= ex.text.size() && a.start < a.end) v.push_back(&a);
  }
  std::sort(v.begin(), v.end(), [](auto* x, auto* y) { return x->start < y->start; });
  return v;
}

std::string render_json(const Explanation& ex) {
  json j;
  j["version"] = 1;
  j["text"] = ex.text;
  j["target_class"] = to_string(ex.target_class);
  j["probe_probability"] = ex.probe_probability;
  j["intercept"] = ex.intercept;
  j["r2"] = ex.surrogate_r2;
  json attrs = json::array();
  for (const auto& a : ex.attributions) {
    attrs.push_back({{"token", a.token}, {"start", a.start}, {"end", a.end}, {"weight", a.weight}});
  }
  j["attributions"] = std::move(attrs);
  return j.dump(2, ' ', false) + "\n";
}

std::string render_html(const Explanation& ex) {
  const double peak = max_abs(ex);
  std::string body;
  std::size_t cursor = 0;
  for (const Attribution* a : by_position(ex)) {
    if (a->start < cursor) continue;
    body += html_escape(std::string_view(ex.text).substr(cursor, a->start - cursor));
    const double alpha = peak > 0.0 ? 0.9 * std::abs(a->weight) / peak : 0.0;
    const bool supports = a->weight > 0.0;
    body += "<span class=\"hl ";
    body += supports ? "pos" : "neg";
    body += "\" style=\"background-color: rgba(";
    body += supports ? "255, 127, 14, " : "31, 119, 180, ";
    body += fmt("%.3f", alpha) + ")\" title=\"" + fmt("%+.6f", a->weight) + "\">";
    body += html_escape(std::string_view(ex.text).substr(a->start, a->end - a->start));
    body += "</span>";
    cursor = a->end;
  }
  body += html_escape(std::string_view(ex.text).substr(cursor));

  std::string rows;
  for (const auto& a : ex.attributions) {
    rows += "<tr><td>" + html_escape(a.token) + "</td><td>" + fmt("%+.6f", a.weight) + "</td></tr>\n";
  }
  std::string out;
  out += "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Explanation</title>\n";
  out += "<style>\nbody { font-family: sans-serif; margin: 2em; }\n"
         ".text { font-size: 1.2em; line-height: 1.8; }\n"
         ".hl { border-radius: 3px; padding: 0 2px; }\n"
         "table { border-collapse: collapse; } td { padding: 2px 8px; border-bottom: 1px solid #ddd; }\n</style>\n";
  out += "</head>\n<body>\n";
  out += "<p class=\"meta\">target class: " + std::string(to_string(ex.target_class)) +
         ", probability " + fmt("%.4f", ex.probe_probability) + ", surrogate r2 " + fmt("%.4f", ex.surrogate_r2) +
         "</p>\n";
  out += "<p class=\"text\">" + body + "</p>\n";
  out += "<table>\n<tr><th>token</th><th>weight</th></tr>\n" + rows + "</table>\n</body>\n</html>\n";
  return out;
}

std::string render_ansi(const Explanation& ex) {
  const double peak = max_abs(ex);
  std::string out;
  out += "target: " + std::string(to_string(ex.target_class)) + "  p=" + fmt("%.4f", ex.probe_probability) +
         "  r2=" + fmt("%.4f", ex.surrogate_r2) + "\n";
  std::size_t cursor = 0;
  for (const Attribution* a : by_position(ex)) {
    if (a->start < cursor) continue;
    out.append(ex.text, cursor, a->start - cursor);
    const bool strong = peak > 0.0 && std::abs(a->weight) >= 0.5 * peak;
    // 256-colour backgrounds: orange supports the target, blue opposes it.
    const int colour = a->weight > 0.0 ? (strong ? 208 : 223) : (strong ? 33 : 153);
    out += "\x1b[30;48;5;" + std::to_string(colour) + "m";
    out.append(ex.text, a->start, a->end - a->start);
    out += "\x1b[0m";
    cursor = a->end;
  }
  out.append(ex.text, cursor);
  out += "\n";
  for (const auto& a : ex.attributions) out += "  " + fmt("%+.6f", a.weight) + "  " + a.token + "\n";
  return out;
}

}  // namespace

RenderFormat parse_render_format(std::string_view name) {
  if (name == "json") return RenderFormat::json;
  if (name == "html") return RenderFormat::html;
  if (name == "ansi") return RenderFormat::ansi;
  throw ArgumentError("unknown render format '" + std::string(name) + "' (expected json, html or ansi)");
}

std::string render_explanation(const Explanation& ex, RenderFormat format) {
  switch (format) {
    case RenderFormat::json: return render_json(ex);
    case RenderFormat::html: return render_html(ex);
    case RenderFormat::ansi: return render_ansi(ex);
  }
  throw ArgumentError("unknown render format");
}

Explanation parse_explanation_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("explanation is not valid json: ") + e.what());
  }
  try {
    Explanation ex;
    if (j.at("version").get<int>() != 1) throw ValidationError("unsupported explanation version");
    ex.text = j.at("text").get<std::string>();
    const auto label = parse_label(j.at("target_class").get<std::string>());
    if (!label) throw ValidationError("unknown target class in explanation");
    ex.target_class = *label;
    ex.probe_probability = j.at("probe_probability").get<double>();
    ex.intercept = j.at("intercept").get<double>();
    ex.surrogate_r2 = j.at("r2").get<double>();
    for (const auto& a : j.at("attributions")) {
      ex.attributions.push_back({a.at("token").get<std::string>(), a.at("start").get<std::size_t>(),
                                 a.at("end").get<std::size_t>(), a.at("weight").get<double>()});
    }
    return ex;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed explanation: ") + e.what());
  }
}

}  // namespace mlsent::limex
