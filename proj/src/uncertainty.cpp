#include "foram/uncertainty.hpp"

#include <algorithm>
#include <cstdio>

namespace foram {

std::string flag_to_string(DifficultyFlag flag) {
  switch (flag) {
    case DifficultyFlag::ok: return "ok";
    case DifficultyFlag::uncertain: return "uncertain";
    case DifficultyFlag::confident_wrong: return "confident_wrong";
  }
  return "ok";
}

McRun mc_predict(const ClassifierParams& params, const Matrix& features, int n_passes,
                 std::uint64_t seed) {
  if (n_passes < 1) throw ValidationError("mc_predict: n_passes must be >= 1");
  if (params.dropout_rate == 0.0)
    std::fprintf(stderr,
                 "warning: mc_predict with dropout_rate 0 - all passes are identical\n");

  McRun run;
  run.n_passes = n_passes;
  run.batch = features.rows;
  run.classes = params.output_dim();
  run.seed = seed;
  run.predictions.resize(static_cast<std::size_t>(n_passes) * run.batch * run.classes);

  for (int pass = 0; pass < n_passes; ++pass) {
    Rng rng(derive_seed(seed, "mc-pass", static_cast<std::uint64_t>(pass)));
    const Matrix probs = nn_forward(params, features, Mode::train, &rng);
    std::copy(probs.data.begin(), probs.data.end(),
              run.predictions.begin() +
                  static_cast<std::size_t>(pass) * run.batch * run.classes);
  }
  return run;
}

McSummary summarize(const McRun& run) {
  if (run.n_passes < 1) throw ValidationError("summarize: empty run");
  McSummary s;
  s.batch = run.batch;
  s.classes = run.classes;
  s.n_passes = run.n_passes;
  const std::size_t cells = static_cast<std::size_t>(run.batch) * run.classes;
  s.mean.assign(cells, 0.0);
  s.variance.assign(cells, 0.0);
  s.votes.assign(cells, 0);
  s.predicted_class.assign(static_cast<std::size_t>(run.batch), 0);

  // Mean via shifted accumulation around the first pass: exact (and thus
  // exactly-zero variance) when every pass is identical.
  const double n = static_cast<double>(run.n_passes);
  for (int pass = 1; pass < run.n_passes; ++pass)
    for (std::size_t i = 0; i < cells; ++i)
      s.mean[i] += run.predictions[static_cast<std::size_t>(pass) * cells + i] -
                   run.predictions[i];
  for (std::size_t i = 0; i < cells; ++i) s.mean[i] = run.predictions[i] + s.mean[i] / n;

  for (int pass = 0; pass < run.n_passes; ++pass) {
    for (std::size_t i = 0; i < cells; ++i) {
      const double d = run.predictions[static_cast<std::size_t>(pass) * cells + i] - s.mean[i];
      s.variance[i] += d * d / n;
    }
  }

  for (int pass = 0; pass < run.n_passes; ++pass) {
    for (int item = 0; item < run.batch; ++item) {
      int best = 0;
      for (int c = 1; c < run.classes; ++c)
        if (run.at(pass, item, c) > run.at(pass, item, best)) best = c;
      s.votes[static_cast<std::size_t>(item) * run.classes + best] += 1;
    }
  }

  for (int item = 0; item < run.batch; ++item) {
    int best = 0;
    for (int c = 1; c < run.classes; ++c)
      if (s.mean_at(item, c) > s.mean_at(item, best)) best = c;
    s.predicted_class[static_cast<std::size_t>(item)] = best;
  }
  return s;
}

std::vector<int> majority_vote(const McSummary& summary) {
  std::vector<int> out(static_cast<std::size_t>(summary.batch));
  for (int item = 0; item < summary.batch; ++item) {
    int best = 0;
    for (int c = 1; c < summary.classes; ++c) {
      const int vc = summary.votes_at(item, c);
      const int vb = summary.votes_at(item, best);
      if (vc > vb) {
        best = c;
      } else if (vc == vb && summary.mean_at(item, c) > summary.mean_at(item, best)) {
        best = c;
      }
    }
    out[static_cast<std::size_t>(item)] = best;
  }
  return out;
}

std::vector<DifficultyFlag> flag_difficult(const McSummary& summary,
                                           const std::vector<int>& labels,
                                           const FlagThresholds& thresholds) {
  if (static_cast<std::size_t>(summary.batch) != labels.size())
    throw ValidationError("flag_difficult: label count mismatch");

  std::vector<DifficultyFlag> flags(static_cast<std::size_t>(summary.batch));
  for (int item = 0; item < summary.batch; ++item) {
    double top = -1.0, second = -1.0;
    for (int c = 0; c < summary.classes; ++c) {
      const double m = summary.mean_at(item, c);
      if (m > top) {
        second = top;
        top = m;
      } else if (m > second) {
        second = m;
      }
    }
    const int predicted = summary.predicted_class[static_cast<std::size_t>(item)];
    DifficultyFlag flag = DifficultyFlag::ok;
    if (top < thresholds.confidence || top - second < thresholds.margin)
      flag = DifficultyFlag::uncertain;
    else if (predicted != labels[static_cast<std::size_t>(item)])
      flag = DifficultyFlag::confident_wrong;
    flags[static_cast<std::size_t>(item)] = flag;
  }
  return flags;
}

double uncertainty_score(const McSummary& summary, int item) {
  double score = 0.0;
  for (int c = 0; c < summary.classes; ++c)
    score = std::max(score, summary.variance_at(item, c));
  return score;
}

std::vector<int> prediction_histogram(const McRun& run, int item, int cls, int bins) {
  std::vector<int> hist(static_cast<std::size_t>(bins), 0);
  for (int pass = 0; pass < run.n_passes; ++pass) {
    const double p = run.at(pass, item, cls);
    int bin = static_cast<int>(p * bins);
    bin = std::clamp(bin, 0, bins - 1);
    hist[static_cast<std::size_t>(bin)] += 1;
  }
  return hist;
}

}  // namespace foram
