#include "cfield/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace cfield {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_lengths(const std::vector<double>& a, const std::vector<double>& b, const char* op) {
  if (a.size() != b.size())
    fail_internal(std::string(op) + ": length mismatch " + std::to_string(a.size()) + " vs " +
                  std::to_string(b.size()));
  if (a.size() < 2) fail_internal(std::string(op) + ": need at least 2 values");
}

// Counts pairs i<j with v[i] > v[j] (strict), by merge sort.
uint64_t count_inversions(std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<double> tmp(n);
  uint64_t count = 0;
  for (size_t width = 1; width < n; width *= 2) {
    for (size_t lo = 0; lo + width < n; lo += 2 * width) {
      const size_t mid = lo + width, hi = std::min(lo + 2 * width, n);
      size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[i] <= v[j]) {
          tmp[k++] = v[i++];
        } else {
          count += mid - i;
          tmp[k++] = v[j++];
        }
      }
      while (i < mid) tmp[k++] = v[i++];
      while (j < hi) tmp[k++] = v[j++];
      std::copy(tmp.begin() + static_cast<ptrdiff_t>(lo), tmp.begin() + static_cast<ptrdiff_t>(hi),
                v.begin() + static_cast<ptrdiff_t>(lo));
    }
  }
  return count;
}

uint64_t tie_pairs(const std::vector<double>& sorted) {
  uint64_t total = 0;
  size_t run = 1;
  for (size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      total += static_cast<uint64_t>(run) * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

}  // namespace

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  check_lengths(a, b, "pearson");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) {
    log_warn("pearson: constant input, correlation undefined");
    return kNaN;
  }
  return cov / std::sqrt(va * vb);
}

std::vector<double> midranks(const std::vector<double>& values) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t i, size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t t = i; t <= j; ++t) ranks[order[t]] = mid;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  check_lengths(a, b, "spearman");
  return pearson(midranks(a), midranks(b));
}

double kendall(const std::vector<double>& a, const std::vector<double>& b) {
  check_lengths(a, b, "kendall");
  const size_t n = a.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t i, size_t j) {
    if (a[i] != a[j]) return a[i] < a[j];
    return b[i] < b[j];
  });

  // pairs tied in a, and tied in both, from runs in (a,b)-sorted order
  uint64_t tie_a = 0, tie_ab = 0;
  {
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      uint64_t both = 1;
      while (j + 1 < n && a[order[j + 1]] == a[order[i]]) {
        if (b[order[j + 1]] == b[order[j]]) {
          ++both;
        } else {
          tie_ab += both * (both - 1) / 2;
          both = 1;
        }
        ++j;
      }
      tie_ab += both * (both - 1) / 2;
      const uint64_t run = j - i + 1;
      tie_a += run * (run - 1) / 2;
      i = j + 1;
    }
  }

  std::vector<double> bs(n);
  for (size_t i = 0; i < n; ++i) bs[i] = b[order[i]];
  std::vector<double> b_for_ties = bs;
  const uint64_t discordant = count_inversions(bs);
  std::sort(b_for_ties.begin(), b_for_ties.end());
  const uint64_t tie_b = tie_pairs(b_for_ties);

  const uint64_t total = static_cast<uint64_t>(n) * (n - 1) / 2;
  if (tie_a == total || tie_b == total) {
    log_warn("kendall: all values tied on one side, tau-b undefined");
    return kNaN;
  }
  const double num = static_cast<double>(total) - static_cast<double>(tie_a) - static_cast<double>(tie_b) +
                     static_cast<double>(tie_ab) - 2.0 * static_cast<double>(discordant);
  // single sqrt of the exact integer product so perfect (anti)correlation
  // comes out as exactly +-1
  const double den = std::sqrt(static_cast<double>(total - tie_a) * static_cast<double>(total - tie_b));
  return num / den;
}

namespace {

SampleMetrics metrics_for(const std::string& name, const std::vector<double>& pred,
                          const std::vector<double>& label) {
  SampleMetrics m;
  m.name = name;
  m.pearson = pearson(pred, label);
  m.spearman = spearman(pred, label);
  m.kendall = kendall(pred, label);
  m.valid = std::isfinite(m.pearson) && std::isfinite(m.spearman) && std::isfinite(m.kendall);
  return m;
}

}  // namespace

MetricsReport evaluate_dataset(const std::vector<LabelGrid>& preds, const std::vector<LabelGrid>& labels,
                               const std::vector<std::string>& names, bool pooled) {
  if (preds.empty()) fail_data("evaluate_dataset: empty dataset");
  if (preds.size() != labels.size() || preds.size() != names.size())
    fail_internal("evaluate_dataset: mismatched pred/label/name counts");
  for (size_t i = 0; i < preds.size(); ++i)
    if (preds[i].w != labels[i].w || preds[i].h != labels[i].h)
      fail_data("evaluate_dataset: '" + names[i] + "' prediction " + std::to_string(preds[i].w) + "x" +
                std::to_string(preds[i].h) + " vs label " + std::to_string(labels[i].w) + "x" +
                std::to_string(labels[i].h));

  MetricsReport report;
  report.pooled = pooled;
  if (pooled) {
    std::vector<double> all_pred, all_label;
    for (size_t i = 0; i < preds.size(); ++i) {
      all_pred.insert(all_pred.end(), preds[i].values.begin(), preds[i].values.end());
      all_label.insert(all_label.end(), labels[i].values.begin(), labels[i].values.end());
    }
    SampleMetrics m = metrics_for("pooled", all_pred, all_label);
    report.samples.push_back(m);
    if (m.valid) {
      report.mean_pearson = m.pearson;
      report.mean_spearman = m.spearman;
      report.mean_kendall = m.kendall;
    } else {
      report.excluded = 1;
    }
    return report;
  }

  int64_t counted = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    SampleMetrics m = metrics_for(names[i], preds[i].values, labels[i].values);
    if (m.valid) {
      report.mean_pearson += m.pearson;
      report.mean_spearman += m.spearman;
      report.mean_kendall += m.kendall;
      ++counted;
    } else {
      ++report.excluded;
    }
    report.samples.push_back(std::move(m));
  }
  if (counted > 0) {
    report.mean_pearson /= static_cast<double>(counted);
    report.mean_spearman /= static_cast<double>(counted);
    report.mean_kendall /= static_cast<double>(counted);
  }
  return report;
}

std::string MetricsReport::to_json() const {
  nlohmann::json doc;
  doc["pooled"] = pooled;
  doc["excluded"] = excluded;
  doc["mean"] = {{"pearson", mean_pearson}, {"spearman", mean_spearman}, {"kendall", mean_kendall}};
  doc["samples"] = nlohmann::json::array();
  for (const SampleMetrics& m : samples) {
    nlohmann::json row;
    row["name"] = m.name;
    row["valid"] = m.valid;
    if (m.valid) {
      row["pearson"] = m.pearson;
      row["spearman"] = m.spearman;
      row["kendall"] = m.kendall;
    }
    doc["samples"].push_back(row);
  }
  return doc.dump(2);
}

std::string MetricsReport::to_table() const {
  size_t name_w = 6;
  for (const SampleMetrics& m : samples) name_w = std::max(name_w, m.name.size());
  std::ostringstream os;
  char buf[64];
  os << std::string(name_w - 6, ' ') << "sample  pearson  spearman  kendall\n";
  auto row = [&](const std::string& name, double p, double s, double k, bool valid) {
    os << std::string(name_w - name.size(), ' ') << name;
    if (valid) {
      std::snprintf(buf, sizeof(buf), "  %7.4f  %8.4f  %7.4f", p, s, k);
      os << buf;
    } else {
      os << "        -         -        -";
    }
    os << "\n";
  };
  for (const SampleMetrics& m : samples) row(m.name, m.pearson, m.spearman, m.kendall, m.valid);
  if (!pooled) {
    os << std::string(name_w + 35, '-') << "\n";
    row("mean", mean_pearson, mean_spearman, mean_kendall, true);
    if (excluded > 0) os << "(" << excluded << " sample(s) excluded as undefined)\n";
  }
  return os.str();
}

}  // namespace cfield
