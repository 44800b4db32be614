#include "mlsent/metrics.hpp"

#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mlsent/error.hpp"

namespace mlsent {
using nlohmann::json;

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t c = 0; c < kNumLabels; ++c) t += counts[c][c];
  return t;
}

std::size_t ConfusionMatrix::row_sum(std::size_t c) const {
  return std::accumulate(counts[c].begin(), counts[c].end(), std::size_t{0});
}

std::size_t ConfusionMatrix::col_sum(std::size_t c) const {
  std::size_t t = 0;
  for (const auto& row : counts) t += row[c];
  return t;
}

ConfusionMatrix confusion(std::span<const Label> y_true, std::span<const Label> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw ArgumentError("label sequences differ in length: " + std::to_string(y_true.size()) +
                        " vs " + std::to_string(y_pred.size()));
  }
  if (y_true.empty()) throw ArgumentError("label sequences are empty");
  ConfusionMatrix cm;
  for (std::size_t k = 0; k < y_true.size(); ++k) ++cm.counts[index_of(y_true[k])][index_of(y_pred[k])];
  return cm;
}

Scores scores(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) throw ArgumentError("confusion matrix is empty");
  Scores s;
  s.n = total;
  s.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
  std::size_t tp_sum = 0;
  std::size_t pred_sum = 0;
  std::size_t true_sum = 0;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    const std::size_t tp = cm.counts[c][c];
    const std::size_t col = cm.col_sum(c);
    const std::size_t row = cm.row_sum(c);
    ClassScores& cs = s.per_class[c];
    cs.support = row;
    if (col > 0) {
      cs.precision = static_cast<double>(tp) / static_cast<double>(col);
    } else {
      ++s.zero_division_warnings;
    }
    if (row > 0) {
      cs.recall = static_cast<double>(tp) / static_cast<double>(row);
    } else {
      ++s.zero_division_warnings;
    }
    if (cs.precision + cs.recall > 0.0) {
      cs.f1 = 2.0 * cs.precision * cs.recall / (cs.precision + cs.recall);
    } else {
      ++s.zero_division_warnings;
    }
    s.precision += cs.precision / kNumLabels;
    s.recall += cs.recall / kNumLabels;
    s.f1 += cs.f1 / kNumLabels;
    tp_sum += tp;
    pred_sum += col;
    true_sum += row;
  }
  s.micro_precision = static_cast<double>(tp_sum) / static_cast<double>(pred_sum);
  s.micro_recall = static_cast<double>(tp_sum) / static_cast<double>(true_sum);
  return s;
}

EvalReport evaluate(const ClassifierProbe& probe, const Corpus& test_set, std::size_t batch_size) {
  if (test_set.empty()) throw EmptyInputError("test set is empty");
  if (batch_size == 0) throw ArgumentError("batch size must be positive");
  std::vector<Label> truth;
  std::vector<Label> predicted;
  truth.reserve(test_set.size());
  predicted.reserve(test_set.size());
  std::map<std::string, std::pair<std::vector<Label>, std::vector<Label>>> by_language;

  std::vector<std::string> batch;
  for (std::size_t start = 0, b = 0; start < test_set.size(); start += batch_size, ++b) {
    const std::size_t stop = std::min(test_set.size(), start + batch_size);
    batch.clear();
    for (std::size_t i = start; i < stop; ++i) batch.push_back(test_set.examples[i].text);
    std::vector<ProbaRow> rows;
    try {
      rows = probe.predict_proba(batch);
    } catch (const Error& e) {
      throw ProbeError("batch " + std::to_string(b) + " (examples " + std::to_string(start) + ".." +
                       std::to_string(stop - 1) + "): " + e.what());
    }
    for (std::size_t i = start; i < stop; ++i) {
      const auto& ex = test_set.examples[i];
      const Label pred = label_at(argmax(rows[i - start]));
      truth.push_back(ex.label);
      predicted.push_back(pred);
      auto& lang = by_language[ex.language];
      lang.first.push_back(ex.label);
      lang.second.push_back(pred);
    }
  }
  EvalReport report;
  report.confusion = confusion(truth, predicted);
  report.overall = scores(report.confusion);
  report.n = truth.size();
  for (const auto& [lang, pair] : by_language) {
    report.per_language[lang] = scores(confusion(pair.first, pair.second));
  }
  return report;
}

namespace {

json scores_to_json(const Scores& s) {
  json j;
  j["accuracy"] = s.accuracy;
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  j["f1"] = s.f1;
  j["micro_precision"] = s.micro_precision;
  j["micro_recall"] = s.micro_recall;
  j["n"] = s.n;
  j["zero_division_warnings"] = s.zero_division_warnings;
  j["per_class"] = json::object();
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    const auto& cs = s.per_class[c];
    j["per_class"][std::string(to_string(label_at(c)))] = {
        {"precision", cs.precision}, {"recall", cs.recall}, {"f1", cs.f1}, {"support", cs.support}};
  }
  return j;
}

Scores scores_from_json(const json& j) {
  Scores s;
  s.accuracy = j.at("accuracy").get<double>();
  s.precision = j.at("precision").get<double>();
  s.recall = j.at("recall").get<double>();
  s.f1 = j.at("f1").get<double>();
  s.micro_precision = j.value("micro_precision", s.accuracy);
  s.micro_recall = j.value("micro_recall", s.accuracy);
  s.n = j.value("n", std::size_t{0});
  s.zero_division_warnings = j.value("zero_division_warnings", std::size_t{0});
  if (j.contains("per_class")) {
    for (std::size_t c = 0; c < kNumLabels; ++c) {
      const std::string key(to_string(label_at(c)));
      if (!j["per_class"].contains(key)) continue;
      const json& pc = j["per_class"][key];
      s.per_class[c] = {pc.at("precision").get<double>(), pc.at("recall").get<double>(),
                        pc.at("f1").get<double>(), pc.value("support", std::size_t{0})};
    }
  }
  return s;
}

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string report_json(const EvalReport& report) {
  json doc;
  doc["version"] = 1;
  doc["averaging"] = report.averaging;
  doc["class_order"] = {"positive", "neutral", "negative"};
  doc["n"] = report.n;
  doc["overall"] = scores_to_json(report.overall);
  doc["confusion"] = report.confusion.counts;
  doc["per_language"] = json::object();
  for (const auto& [lang, s] : report.per_language) doc["per_language"][lang] = scores_to_json(s);
  return doc.dump(2) + "\n";
}

EvalReport parse_report_json(const std::string& text) {
  EvalReport report;
  try {
    const json doc = json::parse(text);
    report.averaging = doc.value("averaging", std::string("macro"));
    report.n = doc.value("n", std::size_t{0});
    report.overall = scores_from_json(doc.at("overall"));
    if (doc.contains("confusion")) {
      report.confusion.counts = doc["confusion"].get<decltype(report.confusion.counts)>();
    }
    if (doc.contains("per_language")) {
      for (const auto& item : doc["per_language"].items()) {
        report.per_language[item.key()] = scores_from_json(item.value());
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
  return report;
}

std::string comparison_row(const std::string& name, const Scores& s) {
  return name + " " + fmt2(s.accuracy * 100.0) + "% " + fmt2(s.precision) + " " + fmt2(s.recall) +
         " " + fmt2(s.f1);
}

ComparisonTable comparison_table(const std::vector<std::pair<std::string, EvalReport>>& reports) {
  ComparisonTable table;
  std::ostringstream text;
  std::ostringstream md;
  json rows = json::array();

  std::string averaging = reports.empty() ? "macro" : reports.front().second.averaging;
  for (const auto& [name, report] : reports) {
    if (report.averaging != averaging) averaging = "mixed";
  }
  md << "# Model comparison\n\n";
  md << "Accuracy is pooled over all test examples; precision, recall and F1 use " << averaging
     << " averaging over (positive, neutral, negative).\n\n";
  md << "| Model | Accuracy | Precision | Recall | F1-Score |\n";
  md << "|---|---:|---:|---:|---:|\n";
  for (const auto& [name, report] : reports) {
    const Scores& s = report.overall;
    text << comparison_row(name, s) << '\n';
    md << "| " << name << " | " << fmt2(s.accuracy * 100.0) << "% | " << fmt2(s.precision) << " | "
       << fmt2(s.recall) << " | " << fmt2(s.f1) << " |\n";
    rows.push_back({{"model", name},
                    {"accuracy", s.accuracy},
                    {"precision", s.precision},
                    {"recall", s.recall},
                    {"f1", s.f1},
                    {"averaging", report.averaging},
                    {"n", report.n}});
  }
  md << "\n```text\n" << text.str() << "```\n";
  table.text = text.str();
  table.markdown = md.str();
  table.json = json{{"version", 1}, {"averaging", averaging}, {"rows", rows}}.dump(2) + "\n";
  return table;
}

}  // namespace mlsent
