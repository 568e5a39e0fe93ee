// src/scoring.cc

// Copyright 2026  LIDKit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "lidkit/scoring.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lidkit/errors.h"

namespace lidkit {

void TrialScoreSet::validate() const {
  const index_t n = num_utterances(), l = num_languages();
  if (l < 1) throw DataError("score set has no languages");
  if (static_cast<index_t>(true_labels.size()) != n ||
      static_cast<index_t>(duration_tags.size()) != n) {
    throw DataError("score set metadata is misaligned");
  }
  if (!scores.defined() || scores.rank() != 2 || scores.dim(0) != n || scores.dim(1) != l) {
    throw DataError("score matrix shape does not match trial metadata");
  }
  for (int y : true_labels) {
    if (y < 0 || y >= l) throw DataError("true label index out of range");
  }
  if (!scores.all_finite()) throw DataError("score matrix contains non-finite values");
}

TrialScoreSet TrialScoreSet::subset(const std::vector<index_t> &rows) const {
  TrialScoreSet out;
  out.languages = languages;
  out.scores = Tensor::zeros({std::max<index_t>(1, static_cast<index_t>(rows.size())),
                              num_languages()});
  index_t r = 0;
  for (index_t row : rows) {
    out.utterance_ids.push_back(utterance_ids[static_cast<std::size_t>(row)]);
    out.true_labels.push_back(true_labels[static_cast<std::size_t>(row)]);
    out.duration_tags.push_back(duration_tags[static_cast<std::size_t>(row)]);
    for (index_t c = 0; c < num_languages(); ++c) {
      out.scores.at({r, c}) = scores.at({row, c});
    }
    ++r;
  }
  return out;
}

double log_odds_from_log_posterior(double log_posterior) {
  // log(p) - log(1-p) computed as lp - log(-expm1(lp)); the clamp keeps the
  // score finite when the posterior rounds to exactly 1.
  const double one_minus_p = std::max(-std::expm1(log_posterior), 1e-300);
  return log_posterior - std::log(one_minus_p);
}

double compute_eer(const TrialScoreSet &scores) {
  scores.validate();
  std::vector<double> targets, nontargets;
  const index_t n = scores.num_utterances(), l = scores.num_languages();
  for (index_t i = 0; i < n; ++i) {
    for (index_t c = 0; c < l; ++c) {
      const double s = scores.scores.at({i, c});
      if (c == scores.true_labels[static_cast<std::size_t>(i)]) {
        targets.push_back(s);
      } else {
        nontargets.push_back(s);
      }
    }
  }
  if (targets.empty() || nontargets.empty()) {
    throw NumericError("EER undefined: need at least one target and one non-target trial");
  }
  std::vector<double> thresholds;
  thresholds.reserve(targets.size() + nontargets.size());
  thresholds.insert(thresholds.end(), targets.begin(), targets.end());
  thresholds.insert(thresholds.end(), nontargets.begin(), nontargets.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::sort(targets.begin(), targets.end());
  std::sort(nontargets.begin(), nontargets.end());
  const double t_count = static_cast<double>(targets.size());
  const double n_count = static_cast<double>(nontargets.size());
  auto p_miss = [&](double th) {  // fraction of targets strictly below th
    return static_cast<double>(std::lower_bound(targets.begin(), targets.end(), th) -
                               targets.begin()) /
           t_count;
  };
  auto p_fa = [&](double th) {  // fraction of non-targets at or above th
    return static_cast<double>(nontargets.end() -
                               std::lower_bound(nontargets.begin(), nontargets.end(), th)) /
           n_count;
  };

  // Sweep upward; d = P_miss - P_fa rises from -1 toward +1. A virtual end
  // point above the maximum score (P_miss = 1, P_fa = 0) guarantees a
  // crossing.
  double prev_miss = 0.0;
  double prev_d = -1.0;
  for (std::size_t i = 0; i <= thresholds.size(); ++i) {
    double cur_miss, cur_fa;
    if (i < thresholds.size()) {
      cur_miss = p_miss(thresholds[i]);
      cur_fa = p_fa(thresholds[i]);
    } else {
      cur_miss = 1.0;
      cur_fa = 0.0;
    }
    const double d = cur_miss - cur_fa;
    if (d >= 0.0) {
      if (d == 0.0) return cur_miss;
      const double t = -prev_d / (d - prev_d);
      return prev_miss + t * (cur_miss - prev_miss);
    }
    prev_miss = cur_miss;
    prev_d = d;
  }
  throw NumericError("EER sweep found no crossing");  // unreachable
}

double compute_cavg(const TrialScoreSet &scores, double threshold) {
  scores.validate();
  const index_t n = scores.num_utterances(), l = scores.num_languages();
  if (l < 2) throw DataError("Cavg needs at least 2 languages");
  constexpr double kCMiss = 1.0, kCFa = 1.0, kPTarget = 0.5;
  const double p_nontarget = (1.0 - kPTarget) / static_cast<double>(l - 1);

  std::vector<index_t> trials_per_lang(static_cast<std::size_t>(l), 0);
  for (int y : scores.true_labels) ++trials_per_lang[static_cast<std::size_t>(y)];
  for (index_t t = 0; t < l; ++t) {
    if (trials_per_lang[static_cast<std::size_t>(t)] == 0) {
      throw DataError("Cavg undefined: language '" +
                      scores.languages[static_cast<std::size_t>(t)] +
                      "' has no target trials");
    }
  }

  double total = 0.0;
  for (index_t t = 0; t < l; ++t) {
    index_t misses = 0;
    std::vector<index_t> fa(static_cast<std::size_t>(l), 0);
    for (index_t i = 0; i < n; ++i) {
      const bool accept = scores.scores.at({i, t}) >= threshold;
      const int truth = scores.true_labels[static_cast<std::size_t>(i)];
      if (truth == t) {
        if (!accept) ++misses;
      } else if (accept) {
        ++fa[static_cast<std::size_t>(truth)];
      }
    }
    double cost = kCMiss * kPTarget * static_cast<double>(misses) /
                  static_cast<double>(trials_per_lang[static_cast<std::size_t>(t)]);
    for (index_t other = 0; other < l; ++other) {
      if (other == t) continue;
      cost += kCFa * p_nontarget * static_cast<double>(fa[static_cast<std::size_t>(other)]) /
              static_cast<double>(trials_per_lang[static_cast<std::size_t>(other)]);
    }
    total += cost;
  }
  return total / static_cast<double>(l);
}

TrialScoreSet fuse_scores(const std::vector<TrialScoreSet> &sets,
                          std::vector<double> weights) {
  if (sets.empty()) throw DataError("fuse_scores: no score sets");
  if (weights.empty()) {
    weights.assign(sets.size(), 1.0 / static_cast<double>(sets.size()));
  }
  if (weights.size() != sets.size()) {
    throw DataError("fuse_scores: weight count does not match score sets");
  }
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  if (std::fabs(wsum - 1.0) > 1e-9) {
    throw DataError("fuse_scores: weights must sum to 1");
  }
  const TrialScoreSet &base = sets.front();
  base.validate();
  const index_t n = base.num_utterances(), l = base.num_languages();

  TrialScoreSet fused;
  fused.utterance_ids = base.utterance_ids;
  fused.languages = base.languages;
  fused.true_labels = base.true_labels;
  fused.duration_tags = base.duration_tags;
  fused.scores = Tensor::zeros({n, l});

  for (std::size_t s = 0; s < sets.size(); ++s) {
    const TrialScoreSet &set = sets[s];
    set.validate();
    if (set.utterance_ids != base.utterance_ids) {
      throw DataError("fuse_scores: utterance lists do not align");
    }
    // language columns may be permuted between systems; align by name
    std::vector<index_t> col(static_cast<std::size_t>(l));
    for (index_t c = 0; c < l; ++c) {
      const auto it = std::find(set.languages.begin(), set.languages.end(),
                                base.languages[static_cast<std::size_t>(c)]);
      if (it == set.languages.end()) {
        throw DataError("fuse_scores: language '" +
                        base.languages[static_cast<std::size_t>(c)] +
                        "' missing from one system");
      }
      col[static_cast<std::size_t>(c)] = it - set.languages.begin();
    }
    for (index_t i = 0; i < n; ++i) {
      const int yb = base.true_labels[static_cast<std::size_t>(i)];
      const int ys = set.true_labels[static_cast<std::size_t>(i)];
      if (set.languages[static_cast<std::size_t>(ys)] !=
          base.languages[static_cast<std::size_t>(yb)]) {
        throw DataError("fuse_scores: true labels disagree for utterance '" +
                        base.utterance_ids[static_cast<std::size_t>(i)] + "'");
      }
      for (index_t c = 0; c < l; ++c) {
        fused.scores.at({i, c}) +=
            weights[s] * set.scores.at({i, col[static_cast<std::size_t>(c)]});
      }
    }
  }
  return fused;
}

namespace {

// duration tags sort by numeric prefix first ("3s" < "10s" < "30s")
bool tag_less(const std::string &a, const std::string &b) {
  const double na = std::atof(a.c_str());
  const double nb = std::atof(b.c_str());
  if (na != nb) return na < nb;
  return a < b;
}

std::string pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
  return buf;
}

}  // namespace

MetricReport compute_report(const TrialScoreSet &scores) {
  scores.validate();
  MetricReport report;
  std::vector<std::string> tags;
  for (const std::string &t : scores.duration_tags) {
    if (std::find(tags.begin(), tags.end(), t) == tags.end()) tags.push_back(t);
  }
  std::sort(tags.begin(), tags.end(), tag_less);
  for (const std::string &tag : tags) {
    std::vector<index_t> rows;
    for (index_t i = 0; i < scores.num_utterances(); ++i) {
      if (scores.duration_tags[static_cast<std::size_t>(i)] == tag) rows.push_back(i);
    }
    MetricReport::Row row;
    row.tag = tag;
    row.utterances = static_cast<index_t>(rows.size());
    try {
      const TrialScoreSet sub = scores.subset(rows);
      row.cavg = compute_cavg(sub);
      row.eer = compute_eer(sub);
      row.valid = true;
    } catch (const std::runtime_error &) {
      row.valid = false;  // reported as N/R, matching the table convention
    }
    report.rows.push_back(row);
  }
  MetricReport::Row all;
  all.tag = "all";
  all.utterances = scores.num_utterances();
  all.cavg = compute_cavg(scores);
  all.eer = compute_eer(scores);
  all.valid = true;
  report.rows.push_back(all);
  return report;
}

std::string MetricReport::table() const {
  std::ostringstream os;
  os << "duration  utterances  Cavg(%)  EER(%)\n";
  for (const Row &row : rows) {
    char buf[96];
    if (row.valid) {
      std::snprintf(buf, sizeof(buf), "%-8s  %10lld  %7s  %6s\n", row.tag.c_str(),
                    static_cast<long long>(row.utterances), pct(row.cavg).c_str(),
                    pct(row.eer).c_str());
    } else {
      std::snprintf(buf, sizeof(buf), "%-8s  %10lld  %7s  %6s\n", row.tag.c_str(),
                    static_cast<long long>(row.utterances), "N/R", "N/R");
    }
    os << buf;
  }
  return os.str();
}

std::string MetricReport::key_values() const {
  std::ostringstream os;
  for (const Row &row : rows) {
    const std::string key = row.tag == "all" ? "" : "[" + row.tag + "]";
    if (row.valid) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "cavg%s=%.6f\neer%s=%.6f\ncavg_pct%s=%s\neer_pct%s=%s\n",
                    key.c_str(), row.cavg, key.c_str(), row.eer, key.c_str(),
                    pct(row.cavg).c_str(), key.c_str(), pct(row.eer).c_str());
      os << buf;
    } else {
      os << "cavg" << key << "=N/R\neer" << key << "=N/R\n";
    }
  }
  return os.str();
}

void write_scores_file(const std::string &path, const TrialScoreSet &scores,
                       const std::string &config_hash) {
  scores.validate();
  std::ofstream out(path);
  if (!out) throw DataError("cannot create scores file: " + path);
  if (!config_hash.empty()) out << "# config_hash=" << config_hash << "\n";
  out << "utterance_id\tduration\tlabel";
  for (const std::string &lang : scores.languages) out << '\t' << lang;
  out << '\n';
  char buf[64];
  for (index_t i = 0; i < scores.num_utterances(); ++i) {
    out << scores.utterance_ids[static_cast<std::size_t>(i)] << '\t'
        << scores.duration_tags[static_cast<std::size_t>(i)] << '\t'
        << scores.languages[static_cast<std::size_t>(
               scores.true_labels[static_cast<std::size_t>(i)])];
    for (index_t c = 0; c < scores.num_languages(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", scores.scores.at({i, c}));
      out << '\t' << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing scores file: " + path);
}

TrialScoreSet read_scores_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scores file: " + path);
  std::string line;
  int line_no = 0;
  // header (skipping comments)
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) header.push_back(field);
    break;
  }
  if (header.size() < 4 || header[0] != "utterance_id") {
    throw DataError(path + ": missing scores header row");
  }
  TrialScoreSet set;
  set.languages.assign(header.begin() + 3, header.end());
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<std::string> fields;
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != header.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    set.utterance_ids.push_back(fields[0]);
    set.duration_tags.push_back(fields[1]);
    const auto it = std::find(set.languages.begin(), set.languages.end(), fields[2]);
    if (it == set.languages.end()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": label '" + fields[2] +
                      "' is not a score column");
    }
    set.true_labels.push_back(static_cast<int>(it - set.languages.begin()));
    for (std::size_t c = 3; c < fields.size(); ++c) {
      try {
        values.push_back(std::stod(fields[c]));
      } catch (const std::exception &) {
        throw DataError(path + ":" + std::to_string(line_no) + ": bad score '" +
                        fields[c] + "'");
      }
    }
  }
  if (set.utterance_ids.empty()) throw DataError(path + ": no score rows");
  set.scores = Tensor::from(
      {static_cast<index_t>(set.utterance_ids.size()),
       static_cast<index_t>(set.languages.size())},
      std::move(values));
  set.validate();
  return set;
}

TrialScoreSet score_utterances(Model &model, PoolingHead head,
                               const std::vector<FeatureSequence> &utterances,
                               const std::vector<std::string> &languages,
                               const std::vector<std::string> &duration_tags) {
  if (utterances.size() != duration_tags.size()) {
    throw DataError("score_utterances: duration tags misaligned");
  }
  if (static_cast<index_t>(languages.size()) != model.config().num_classes) {
    throw DataError("score_utterances: model has " +
                    std::to_string(model.config().num_classes) + " classes, got " +
                    std::to_string(languages.size()) + " language names");
  }
  TrialScoreSet set;
  set.languages = languages;
  set.duration_tags = duration_tags;
  const auto n = static_cast<index_t>(utterances.size());
  set.scores = Tensor::zeros({n, static_cast<index_t>(languages.size())});
  for (index_t i = 0; i < n; ++i) {
    const FeatureSequence &utt = utterances[static_cast<std::size_t>(i)];
    set.utterance_ids.push_back(utt.utterance_id);
    set.true_labels.push_back(utt.label);
    Tensor logp = model.utterance_log_posteriors(utt.features, head);
    for (index_t c = 0; c < logp.dim(0); ++c) {
      set.scores.at({i, c}) = log_odds_from_log_posterior(logp.data()[c]);
    }
  }
  set.validate();
  return set;
}

}  // namespace lidkit
