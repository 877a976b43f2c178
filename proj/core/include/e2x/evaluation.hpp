#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "e2x/attribution.hpp"
#include "e2x/detection.hpp"

namespace e2x {

/// Pearson correlation; nullopt when either input has zero variance.
/// Throws LengthMismatch unless both inputs have the same length >= 2.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

struct Candidate {
  std::string name;
  MethodConfig config;
};

/// One explanation target: a detection (or any scalar output) on an image.
struct EvalCase {
  std::string id;
  const Image* image = nullptr;
  Detection detection;
};

struct EvalConfig {
  MethodConfig reference;
  std::vector<Candidate> candidates;
  std::vector<EvalCase> cases;
  // Each candidate runs once per seed (overriding its config seed); empty
  // means "use the candidate's own seed".
  std::vector<std::uint64_t> seeds;
  int workers = 1;
};

struct EvalEntry {
  std::string candidate;
  std::string case_id;
  std::uint64_t seed = 0;
  std::optional<double> rho;
  std::uint64_t forwards = 0;
  std::uint64_t backwards = 0;
  double ms = 0.0;
};

struct CandidateSummary {
  std::string name;
  std::optional<double> mean_rho;  // over defined entries
  std::size_t defined = 0;
  std::size_t undefined = 0;
  double mean_forwards = 0.0;
  double mean_backwards = 0.0;
};

struct EvalResult {
  std::vector<EvalEntry> entries;  // candidate-major, then case, then seed
  std::vector<CandidateSummary> summary;
  double wall_ms = 0.0;
};

/// Correlates each candidate's per-pixel explanation with the reference's on
/// every case. Throws NoDetections for an empty case list.
EvalResult compare_to_reference(const PredictionModel& model, const EvalConfig& config);

struct SpeedReport {
  std::string name;
  double ms_per_detection = 0.0;
  double detections_per_second = 0.0;
  double forwards_per_detection = 0.0;
  double backwards_per_detection = 0.0;
};

/// Times every candidate over the cases after one untimed warm-up
/// explanation. Runs are serialized.
std::vector<SpeedReport> benchmark_speed(const PredictionModel& model, const EvalConfig& config);

/// `candidate,detection_id,rho,forwards,backwards,ms`; undefined rho is
/// written as "nan".
std::string eval_entries_to_csv(const EvalResult& result);
std::string eval_summary_to_json(const EvalResult& result,
                                 const std::vector<SpeedReport>& speed = {});

}  // namespace e2x
