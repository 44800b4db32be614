#include "mlsent/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mlsent/error.hpp"
#include "mlsent/random.hpp"
#include "mlsent/unicode.hpp"

namespace mlsent {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ISO 639-1 two-letter codes.
const std::set<std::string, std::less<>>& iso639_1() {
  static const std::set<std::string, std::less<>> codes = {
      "aa", "ab", "ae", "af", "ak", "am", "an", "ar", "as", "av", "ay", "az", "ba", "be", "bg",
      "bh", "bi", "bm", "bn", "bo", "br", "bs", "ca", "ce", "ch", "co", "cr", "cs", "cu", "cv",
      "cy", "da", "de", "dv", "dz", "ee", "el", "en", "eo", "es", "et", "eu", "fa", "ff", "fi",
      "fj", "fo", "fr", "fy", "ga", "gd", "gl", "gn", "gu", "gv", "ha", "he", "hi", "ho", "hr",
      "ht", "hu", "hy", "hz", "ia", "id", "ie", "ig", "ii", "ik", "io", "is", "it", "iu", "ja",
      "jv", "ka", "kg", "ki", "kj", "kk", "kl", "km", "kn", "ko", "kr", "ks", "ku", "kv", "kw",
      "ky", "la", "lb", "lg", "li", "ln", "lo", "lt", "lu", "lv", "mg", "mh", "mi", "mk", "ml",
      "mn", "mr", "ms", "mt", "my", "na", "nb", "nd", "ne", "ng", "nl", "nn", "no", "nr", "nv",
      "ny", "oc", "oj", "om", "or", "os", "pa", "pi", "pl", "ps", "pt", "qu", "rm", "rn", "ro",
      "ru", "rw", "sa", "sc", "sd", "se", "sg", "si", "sk", "sl", "sm", "sn", "so", "sq", "sr",
      "ss", "st", "su", "sv", "sw", "ta", "te", "tg", "th", "ti", "tk", "tl", "tn", "to", "tr",
      "ts", "tt", "tw", "ty", "ug", "uk", "ur", "uz", "ve", "vi", "vo", "wa", "wo", "xh", "yi",
      "yo", "za", "zh", "zu"};
  return codes;
}

bool blank(std::string_view s) {
  for (std::size_t i = 0; i < s.size();) {
    const auto cp = unicode::decode(s, i);
    if (!unicode::is_whitespace(cp.value)) return false;
    i += cp.length;
  }
  return true;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LabeledExample from_fields(const std::string& text, const std::string& label,
                           const std::string& language, std::size_t line) {
  const auto parsed = parse_label(label);
  if (!parsed) {
    throw ValidationError("unknown label \"" + label + "\" (expected positive, neutral, negative)",
                          line);
  }
  return LabeledExample{text, *parsed, language};
}

void load_jsonl(const std::string& data, Corpus& corpus) {
  std::istringstream in(data);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    if (!obj.is_object()) throw ValidationError("record is not a JSON object", lineno);
    for (const char* key : {"text", "label", "language"}) {
      if (!obj.contains(key)) throw ValidationError(std::string("missing field \"") + key + "\"", lineno);
      if (!obj[key].is_string()) throw ValidationError(std::string("field \"") + key + "\" is not a string", lineno);
    }
    for (const auto& item : obj.items()) {
      if (item.key() != "text" && item.key() != "label" && item.key() != "language") {
        throw ValidationError("unexpected field \"" + item.key() + "\"", lineno);
      }
    }
    LabeledExample ex = from_fields(obj["text"].get<std::string>(), obj["label"].get<std::string>(),
                                    obj["language"].get<std::string>(), lineno);
    if (auto warning = validate_example(ex, lineno); !warning.empty()) corpus.warnings.push_back(warning);
    corpus.examples.push_back(std::move(ex));
  }
}

// RFC 4180 records. Returns (starting line, fields) pairs.
std::vector<std::pair<std::size_t, std::vector<std::string>>> parse_csv(const std::string& data) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t row_line = 1;
  auto end_field = [&] {
    fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    const bool empty_row = fields.size() == 1 && fields[0].empty();
    if (!empty_row) rows.emplace_back(row_line, std::move(fields));
    fields.clear();
  };
  for (std::size_t i = 0; i < data.size(); ++i) {
    const char c = data[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      continue;
    } else if (c == '\n') {
      end_row();
      ++line;
      row_line = line;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw ValidationError("unterminated quoted field", row_line);
  if (field_started || !fields.empty()) end_row();
  return rows;
}

void load_csv(const std::string& data, Corpus& corpus) {
  const auto rows = parse_csv(data);
  if (rows.empty()) return;
  const auto& header = rows.front().second;
  std::array<std::size_t, 3> col{};
  const std::array<std::string, 3> names{"text", "label", "language"};
  for (std::size_t k = 0; k < names.size(); ++k) {
    auto it = std::find(header.begin(), header.end(), names[k]);
    if (it == header.end()) throw ValidationError("CSV header lacks column \"" + names[k] + "\"", 1);
    col[k] = static_cast<std::size_t>(it - header.begin());
  }
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [lineno, fields] = rows[r];
    if (fields.size() != header.size()) {
      throw ValidationError("expected " + std::to_string(header.size()) + " fields, found " +
                                std::to_string(fields.size()),
                            lineno);
    }
    LabeledExample ex = from_fields(fields[col[0]], fields[col[1]], fields[col[2]], lineno);
    if (auto warning = validate_example(ex, lineno); !warning.empty()) corpus.warnings.push_back(warning);
    corpus.examples.push_back(std::move(ex));
  }
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string svg_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string bar_chart_svg(const std::string& title,
                          const std::vector<std::pair<std::string, std::size_t>>& bars) {
  const int bar_w = 56;
  const int gap = 16;
  const int plot_h = 240;
  const int top = 48;
  const int left = 40;
  const int width = left * 2 + static_cast<int>(bars.size()) * (bar_w + gap);
  const int height = top + plot_h + 56;
  std::size_t peak = 1;
  for (const auto& b : bars) peak = std::max(peak, b.second);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "  <rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  svg << "  <text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" << svg_escape(title) << "</text>\n";
  svg << "  <line x1=\"" << left - 4 << "\" y1=\"" << top + plot_h << "\" x2=\"" << width - left + 4
      << "\" y2=\"" << top + plot_h << "\" stroke=\"#333\"/>\n";
  int x = left;
  for (const auto& [name, count] : bars) {
    const int h = static_cast<int>(static_cast<double>(count) * plot_h / static_cast<double>(peak));
    svg << "  <rect x=\"" << x << "\" y=\"" << top + plot_h - h << "\" width=\"" << bar_w
        << "\" height=\"" << h << "\" fill=\"#4878a8\"/>\n";
    svg << "  <text x=\"" << x + bar_w / 2 << "\" y=\"" << top + plot_h - h - 6
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << count
        << "</text>\n";
    svg << "  <text x=\"" << x + bar_w / 2 << "\" y=\"" << top + plot_h + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << svg_escape(name) << "</text>\n";
    x += bar_w + gap;
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << body;
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

std::mutex& directory_lock(const fs::path& dir) {
  static std::mutex registry_mutex;
  static std::map<std::string, std::mutex> locks;
  std::error_code ec;
  fs::path key = fs::weakly_canonical(dir, ec);
  if (ec) key = dir;
  std::lock_guard guard(registry_mutex);
  return locks[key.string()];
}

}  // namespace

CorpusFormat format_from_path(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv" ? CorpusFormat::csv : CorpusFormat::jsonl;
}

std::string validate_example(LabeledExample& example, std::size_t line) {
  if (blank(example.text)) throw ValidationError("text is empty", line);
  std::string lang;
  for (char c : example.language) lang += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lang.empty()) throw ValidationError("language is empty", line);
  // Primary subtag of 2-3 ASCII letters, optional "-subtag" parts.
  const std::size_t dash = lang.find('-');
  const std::string primary = lang.substr(0, dash);
  const bool letters = std::all_of(primary.begin(), primary.end(), [](char c) { return c >= 'a' && c <= 'z'; });
  const bool rest_ok = std::all_of(lang.begin(), lang.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
  });
  if (primary.size() < 2 || primary.size() > 3 || !letters || !rest_ok || lang.back() == '-') {
    throw ValidationError("malformed language code \"" + example.language + "\"", line);
  }
  example.language = lang;
  if (!iso639_1().contains(primary)) {
    return "line " + std::to_string(line) + ": language code \"" + lang + "\" is not ISO-639-1";
  }
  return {};
}

Corpus load_corpus(const fs::path& path, CorpusFormat format) {
  if (!fs::exists(path)) throw IoError("no such file: " + path.string());
  if (fs::is_directory(path)) throw IoError("expected a file, got a directory: " + path.string());
  const std::string data = read_file(path);
  Corpus corpus;
  corpus.source_id = path.string();
  if (format == CorpusFormat::jsonl) {
    load_jsonl(data, corpus);
  } else {
    load_csv(data, corpus);
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const fs::path& path, CorpusFormat format) {
  std::ostringstream out;
  if (format == CorpusFormat::jsonl) {
    for (const auto& ex : corpus.examples) {
      json obj;
      obj["text"] = ex.text;
      obj["label"] = std::string(to_string(ex.label));
      obj["language"] = ex.language;
      out << obj.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    }
  } else {
    out << "text,label,language\n";
    for (const auto& ex : corpus.examples) {
      out << csv_quote(ex.text) << ',' << to_string(ex.label) << ',' << ex.language << '\n';
    }
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text(path, out.str());
}

CorpusSplit split_corpus(const Corpus& corpus, const SplitRatios& ratios, std::uint64_t seed) {
  const std::array<double, 3> r{ratios.train, ratios.val, ratios.test};
  for (double x : r) {
    if (!(x > 0.0)) throw ArgumentError("split ratios must be positive");
  }
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) throw ArgumentError("split ratios must sum to 1");
  if (corpus.empty()) throw EmptyInputError("cannot split an empty corpus");

  const std::size_t n = corpus.size();
  // Global split sizes by largest remainder; ties favour train, then val, then test.
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    const double q = static_cast<double>(n) * r[s];
    sizes[s] = static_cast<std::size_t>(std::floor(q + 1e-9));
    frac[s] = q - static_cast<double>(sizes[s]);
    assigned += sizes[s];
  }
  {
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[order[k % 3]];
  }

  // Strata by label, each shuffled by its own seeded stream.
  std::array<std::vector<std::size_t>, kNumLabels> strata;
  for (std::size_t i = 0; i < n; ++i) strata[index_of(corpus.examples[i].label)].push_back(i);
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    Rng rng = Rng::derive(seed, c);
    rng.shuffle(strata[c]);
  }

  // Per-stratum counts: floor of the ideal share, plus at most one extra per
  // (stratum, split) cell so the column totals hit `sizes`.
  std::array<std::array<std::size_t, 3>, kNumLabels> take{};
  std::array<std::array<double, 3>, kNumLabels> cell_frac{};
  std::array<std::size_t, kNumLabels> leftover{};
  std::array<std::size_t, 3> demand = sizes;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    std::size_t used = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      const double q = static_cast<double>(strata[c].size()) * r[s];
      take[c][s] = static_cast<std::size_t>(std::floor(q + 1e-9));
      cell_frac[c][s] = q - static_cast<double>(take[c][s]);
      used += take[c][s];
      demand[s] -= take[c][s];
    }
    leftover[c] = strata[c].size() - used;
  }
  std::array<std::size_t, kNumLabels> strata_order{0, 1, 2};
  std::stable_sort(strata_order.begin(), strata_order.end(),
                   [&](std::size_t a, std::size_t b) { return leftover[a] > leftover[b]; });
  for (std::size_t c : strata_order) {
    std::array<std::size_t, 3> splits{0, 1, 2};
    std::stable_sort(splits.begin(), splits.end(), [&](std::size_t a, std::size_t b) {
      if (demand[a] != demand[b]) return demand[a] > demand[b];
      return cell_frac[c][a] > cell_frac[c][b];
    });
    for (std::size_t s : splits) {
      if (leftover[c] == 0) break;
      if (demand[s] == 0) continue;
      ++take[c][s];
      --demand[s];
      --leftover[c];
    }
  }
  // Only reachable if the one-extra-per-cell allocation is infeasible.
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    for (std::size_t s = 0; s < 3 && leftover[c] > 0; ++s) {
      while (demand[s] > 0 && leftover[c] > 0) {
        ++take[c][s];
        --demand[s];
        --leftover[c];
      }
    }
  }

  std::array<std::vector<std::size_t>, 3> members;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    std::size_t k = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t t = 0; t < take[c][s]; ++t) members[s].push_back(strata[c][k++]);
    }
  }
  CorpusSplit out;
  std::array<Corpus*, 3> targets{&out.train, &out.val, &out.test};
  const std::array<const char*, 3> names{"train", "val", "test"};
  for (std::size_t s = 0; s < 3; ++s) {
    std::sort(members[s].begin(), members[s].end());
    targets[s]->source_id = corpus.source_id + "#" + names[s];
    targets[s]->examples.reserve(members[s].size());
    for (std::size_t i : members[s]) targets[s]->examples.push_back(corpus.examples[i]);
  }
  return out;
}

DistributionReport distribution_report(const Corpus& corpus) {
  if (corpus.empty()) throw EmptyInputError("corpus is empty: " + corpus.source_id);
  DistributionReport report;
  for (Label l : kLabelOrder) report.label_counts[l] = 0;
  for (const auto& ex : corpus.examples) {
    ++report.language_counts[ex.language];
    ++report.label_counts[ex.label];
  }
  report.total = corpus.size();
  return report;
}

std::string distribution_json(const DistributionReport& report) {
  json doc;
  doc["total"] = report.total;
  doc["languages"] = json::object();
  for (const auto& [lang, count] : report.language_counts) doc["languages"][lang] = count;
  doc["labels"] = json::object();
  for (const auto& [label, count] : report.label_counts) doc["labels"][std::string(to_string(label))] = count;
  return doc.dump(2) + "\n";
}

std::vector<fs::path> emit_distribution_artifacts(const DistributionReport& report,
                                                  const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create directory " + out_dir.string());
  std::lock_guard guard(directory_lock(out_dir));

  std::vector<std::pair<std::string, std::size_t>> langs(report.language_counts.begin(),
                                                         report.language_counts.end());
  std::vector<std::pair<std::string, std::size_t>> labels;
  for (const auto& [label, count] : report.label_counts) labels.emplace_back(std::string(to_string(label)), count);

  const std::vector<fs::path> paths{out_dir / "distribution.json",
                                    out_dir / "language_distribution.svg",
                                    out_dir / "label_distribution.svg"};
  write_text(paths[0], distribution_json(report));
  write_text(paths[1], bar_chart_svg("Language distribution", langs));
  write_text(paths[2], bar_chart_svg("Label distribution", labels));
  return paths;
}

}  // namespace mlsent
