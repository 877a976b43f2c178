#include "e2x/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "json.hpp"

#include "e2x/io.hpp"
#include "e2x/parallel.hpp"

namespace e2x {

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorCode::kLengthMismatch, "pearson needs two vectors of equal length >= 2");
  }
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sxy += da * db;
    sxx += da * da;
    syy += db * db;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  // sqrt of the product keeps rho(a, a) exactly 1.
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

Explanation run_one(const PredictionModel& model, const EvalCase& c, const MethodConfig& config) {
  if (!c.image) throw Error(ErrorCode::kInvalidArgument, "evaluation case without an image");
  return explain_detection(model, *c.image, c.detection, config);
}

void check_config(const EvalConfig& config) {
  if (config.cases.empty()) throw Error(ErrorCode::kNoDetections, "no detections to evaluate");
  if (config.candidates.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "evaluation needs at least one candidate");
  }
}

}  // namespace

EvalResult compare_to_reference(const PredictionModel& model, const EvalConfig& config) {
  check_config(config);
  const auto start = Clock::now();
  const std::size_t num_cases = config.cases.size();

  std::vector<ImportanceMap> reference(num_cases);
  parallel_for(num_cases, config.workers, [&](std::size_t i) {
    reference[i] = run_one(model, config.cases[i], config.reference).pixels;
  });

  struct Task {
    std::size_t candidate, case_index;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < config.candidates.size(); ++c) {
    for (std::size_t i = 0; i < num_cases; ++i) {
      if (config.seeds.empty()) {
        tasks.push_back({c, i, config.candidates[c].config.seed});
      } else {
        for (auto s : config.seeds) tasks.push_back({c, i, s});
      }
    }
  }

  EvalResult result;
  result.entries.resize(tasks.size());
  parallel_for(tasks.size(), config.workers, [&](std::size_t t) {
    const Task& task = tasks[t];
    const Candidate& cand = config.candidates[task.candidate];
    MethodConfig mc = cand.config;
    mc.seed = task.seed;
    CountingModel counter(model);
    const auto t0 = Clock::now();
    const Explanation e = run_one(counter, config.cases[task.case_index], mc);
    EvalEntry& entry = result.entries[t];
    entry.ms = elapsed_ms(t0);
    entry.candidate = cand.name;
    entry.case_id = config.cases[task.case_index].id;
    entry.seed = task.seed;
    entry.forwards = counter.forwards();
    entry.backwards = counter.backwards();
    entry.rho = pearson(e.pixels.values(), reference[task.case_index].values());
  });

  const std::size_t per_candidate = tasks.size() / config.candidates.size();
  for (std::size_t c = 0; c < config.candidates.size(); ++c) {
    CandidateSummary s;
    s.name = config.candidates[c].name;
    double sum = 0.0, fwd = 0.0, bwd = 0.0;
    for (std::size_t k = 0; k < per_candidate; ++k) {
      const EvalEntry& e = result.entries[c * per_candidate + k];
      if (e.rho) {
        sum += *e.rho;
        ++s.defined;
      } else {
        ++s.undefined;
      }
      fwd += static_cast<double>(e.forwards);
      bwd += static_cast<double>(e.backwards);
    }
    if (s.defined > 0) s.mean_rho = sum / static_cast<double>(s.defined);
    s.mean_forwards = fwd / static_cast<double>(per_candidate);
    s.mean_backwards = bwd / static_cast<double>(per_candidate);
    result.summary.push_back(std::move(s));
  }
  result.wall_ms = elapsed_ms(start);
  return result;
}

std::vector<SpeedReport> benchmark_speed(const PredictionModel& model, const EvalConfig& config) {
  check_config(config);
  std::vector<SpeedReport> out;
  for (const auto& cand : config.candidates) {
    run_one(model, config.cases.front(), cand.config);
    CountingModel counter(model);
    const auto t0 = Clock::now();
    for (const auto& c : config.cases) run_one(counter, c, cand.config);
    const double ms = elapsed_ms(t0);
    const double n = static_cast<double>(config.cases.size());
    SpeedReport r;
    r.name = cand.name;
    r.ms_per_detection = ms / n;
    r.detections_per_second = ms > 0.0 ? 1000.0 * n / ms : 0.0;
    r.forwards_per_detection = static_cast<double>(counter.forwards()) / n;
    r.backwards_per_detection = static_cast<double>(counter.backwards()) / n;
    out.push_back(std::move(r));
  }
  return out;
}

std::string eval_entries_to_csv(const EvalResult& result) {
  std::string out = "candidate,detection_id,rho,forwards,backwards,ms\n";
  for (const auto& e : result.entries) {
    out += e.candidate + "," + e.case_id + "," + (e.rho ? format_sig9(*e.rho) : "nan") + "," +
           std::to_string(e.forwards) + "," + std::to_string(e.backwards) + "," +
           format_sig9(e.ms) + "\n";
  }
  return out;
}

std::string eval_summary_to_json(const EvalResult& result, const std::vector<SpeedReport>& speed) {
  nlohmann::ordered_json doc;
  doc["wall_ms"] = result.wall_ms;
  auto& cands = doc["candidates"] = nlohmann::ordered_json::array();
  for (const auto& s : result.summary) {
    nlohmann::ordered_json j;
    j["name"] = s.name;
    j["mean_rho"] = s.mean_rho ? nlohmann::ordered_json(*s.mean_rho) : nullptr;
    j["defined"] = s.defined;
    j["undefined"] = s.undefined;
    j["mean_forwards"] = s.mean_forwards;
    j["mean_backwards"] = s.mean_backwards;
    for (const auto& r : speed) {
      if (r.name != s.name) continue;
      j["ms_per_detection"] = r.ms_per_detection;
      j["detections_per_second"] = r.detections_per_second;
    }
    cands.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

}  // namespace e2x
