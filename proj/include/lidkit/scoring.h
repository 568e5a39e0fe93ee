// include/lidkit/scoring.h

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

#ifndef LIDKIT_SCORING_H_
#define LIDKIT_SCORING_H_

#include <string>
#include <vector>

#include "lidkit/features.h"
#include "lidkit/model.h"
#include "lidkit/tensor.h"

namespace lidkit {

// Per-utterance detection scores over the target languages. One trial is an
// (utterance, language) pair; it is a target trial when the language equals
// the utterance's true label. Scores are per-language log-odds
// log(p/(1-p)) of the model's softmax posterior, so the hard-decision
// threshold sits at 0.
struct TrialScoreSet {
  std::vector<std::string> utterance_ids;
  std::vector<std::string> languages;      // score column names
  std::vector<int> true_labels;            // indices into languages
  std::vector<std::string> duration_tags;  // aligned with utterance_ids
  Tensor scores;                           // (N_utt, N_languages)

  index_t num_utterances() const { return static_cast<index_t>(utterance_ids.size()); }
  index_t num_languages() const { return static_cast<index_t>(languages.size()); }
  void validate() const;
  TrialScoreSet subset(const std::vector<index_t> &rows) const;
};

double log_odds_from_log_posterior(double log_posterior);

// Pooled-trial equal error rate: sweep all distinct score thresholds,
// P_miss rising and P_fa falling, linearly interpolated at the crossing.
double compute_eer(const TrialScoreSet &scores);

// NIST LRE-style average detection cost with C_miss = C_fa = 1,
// P_target = 0.5 and the non-target prior split evenly across the other
// languages; hard decisions at score >= threshold (ties accept).
double compute_cavg(const TrialScoreSet &scores, double threshold = 0.0);

// Per-trial weighted mean of scores. Utterance lists must match exactly in
// order; language columns are aligned by name. Default weights are equal.
TrialScoreSet fuse_scores(const std::vector<TrialScoreSet> &sets,
                          std::vector<double> weights = {});

struct MetricReport {
  struct Row {
    std::string tag;  // duration tag, or "all"
    index_t utterances = 0;
    double cavg = 0.0;
    double eer = 0.0;
    bool valid = false;  // false when the subset cannot support the metrics
  };
  std::vector<Row> rows;  // per-duration rows first, then "all"

  const Row &overall() const { return rows.back(); }
  std::string table() const;       // human-readable, Table-1-like layout
  std::string key_values() const;  // machine-readable key=value lines
};

// EER and Cavg overall plus per duration tag ("N/R" rows when a duration
// subset lacks the trials a metric needs).
MetricReport compute_report(const TrialScoreSet &scores);

// Tab-separated scores file: optional leading '#' comment lines (the config
// hash travels there), a header row "utterance_id duration label <langs...>",
// then one row per utterance.
void write_scores_file(const std::string &path, const TrialScoreSet &scores,
                       const std::string &config_hash = "");
TrialScoreSet read_scores_file(const std::string &path);

// Scores every utterance at full length (batch of one, inference-mode
// statistics). Labels of the feature sequences index `languages`;
// duration_tags must align with `utterances`.
TrialScoreSet score_utterances(Model &model, PoolingHead head,
                               const std::vector<FeatureSequence> &utterances,
                               const std::vector<std::string> &languages,
                               const std::vector<std::string> &duration_tags);

}  // namespace lidkit

#endif  // LIDKIT_SCORING_H_
