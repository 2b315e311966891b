// Copyright 2026 The vbeam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VBEAM_BENCH_HPP
#define VBEAM_BENCH_HPP

// Benchmark harness. A run decodes one utterance set under one engine
// configuration: a warmup pass, then measured passes whose median becomes
// the row duration. Timing covers the encoder, the search loop and
// finalization; model and data generation happen before any clock starts.
// When the engine under test is not the scalar reference, a scalar baseline
// row is measured in the same run so the report can carry a speedup column.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vbeam/beam_types.hpp"
#include "vbeam/scalar_engine.hpp"
#include "vbeam/synth_model.hpp"
#include "vbeam/vectorized_engine.hpp"

namespace vbeam {

inline constexpr double kFrameShiftSeconds = 0.010;

/// decode wall-clock divided by simulated audio duration (10 ms frames).
inline double real_time_factor(double decode_seconds,
                               std::uint64_t total_frames) {
  return decode_seconds /
         (static_cast<double>(total_frames) * kFrameShiftSeconds);
}

struct BenchOptions {
  std::string engine = "vectorized";  // scalar | vectorized | scalar-multiworker
  int workers = 1;
  int batch = 1;  // S
  BeamConfig beam;
  bool verify = false;
  int warmup_passes = 1;
  int measured_passes = 3;
};

struct BenchRow {
  std::string engine;
  int batch = 1;
  int beam = 20;
  int workers = 1;
  double ctc_weight = 0.0;
  double lm_weight = 0.0;
  std::int64_t vocab_size = 0;
  std::int64_t num_utts = 0;
  double total_seconds = 0.0;  // median measured pass
  double min_seconds = 0.0;
  double max_seconds = 0.0;
  double mean_ms_per_utt = 0.0;
  double median_ms_per_utt = 0.0;
  double audio_seconds = 0.0;
  double rtf = 0.0;
  double speedup_vs_scalar = 1.0;
  std::string equivalence = "skipped";  // ok | failed | skipped
  PhaseTimers phases;  // summed over measured passes (vectorized engine only)
};

struct BenchReport {
  std::vector<BenchRow> rows;
};

namespace bench_detail {

struct PassStats {
  std::vector<double> pass_seconds;          // one entry per measured pass
  std::vector<double> utt_seconds;           // last pass, one per utterance
  PhaseTimers phases;

  double median_pass() const {
    std::vector<double> v = pass_seconds;
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  }
  double min_pass() const {
    return *std::min_element(pass_seconds.begin(), pass_seconds.end());
  }
  double max_pass() const {
    return *std::max_element(pass_seconds.begin(), pass_seconds.end());
  }
  double median_utt() const {
    std::vector<double> v = utt_seconds;
    std::sort(v.begin(), v.end());
    return v.empty() ? 0.0 : v[v.size() / 2];
  }
};

inline double now_pass(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

/// One full pass of the scalar engine over the set.
inline void scalar_pass(const SyntheticModel& model,
                        std::span<const ScoreMatrix> utts,
                        const BeamConfig& cfg, std::vector<double>* per_utt) {
  for (const ScoreMatrix& u : utts) {
    const DecodeResult r = decode_scalar_reference(model, u, cfg);
    if (per_utt) per_utt->push_back(r.seconds);
  }
}

/// One pass of the batched engine, chunked into batches of size S.
inline void vectorized_pass(const SyntheticModel& model,
                            std::span<const ScoreMatrix> utts,
                            const BeamConfig& cfg, int batch,
                            PhaseTimers* phases, std::vector<double>* per_utt) {
  std::size_t i = 0;
  while (i < utts.size()) {
    const std::size_t n = std::min<std::size_t>(batch, utts.size() - i);
    const auto results =
        decode_batch_vectorized(model, utts.subspan(i, n), cfg, phases);
    if (per_utt) {
      for (const DecodeResult& r : results) {
        per_utt->push_back(r.seconds / static_cast<double>(n));
      }
    }
    i += n;
  }
}

/// One pass of the scalar engine sharded across W in-process workers, each
/// with fully independent state.
inline void multiworker_pass(const SyntheticModel& model,
                             std::span<const ScoreMatrix> utts,
                             const BeamConfig& cfg, int workers,
                             std::vector<double>* per_utt) {
  const std::size_t n = utts.size();
  const std::size_t w_count = std::max(1, workers);
  std::vector<std::vector<double>> times(w_count);
  std::vector<std::thread> threads;
  threads.reserve(w_count);
  for (std::size_t w = 0; w < w_count; ++w) {
    const std::size_t begin = w * n / w_count;
    const std::size_t end = (w + 1) * n / w_count;
    threads.emplace_back([&, w, begin, end] {
      for (std::size_t i = begin; i < end; ++i) {
        const DecodeResult r = decode_scalar_reference(model, utts[i], cfg);
        times[w].push_back(r.seconds);
      }
    });
  }
  for (auto& t : threads) t.join();
  if (per_utt) {
    for (const auto& shard : times) {
      per_utt->insert(per_utt->end(), shard.begin(), shard.end());
    }
  }
}

inline PassStats run_engine(const SyntheticModel& model,
                            std::span<const ScoreMatrix> utts,
                            const BenchOptions& opts,
                            const std::string& engine) {
  PassStats stats;
  const int total = opts.warmup_passes + opts.measured_passes;
  for (int pass = 0; pass < total; ++pass) {
    const bool measured = pass >= opts.warmup_passes;
    const bool last = pass == total - 1;
    std::vector<double>* per_utt = last ? &stats.utt_seconds : nullptr;
    PhaseTimers* phases = measured ? &stats.phases : nullptr;
    const auto t0 = std::chrono::steady_clock::now();
    if (engine == "scalar") {
      scalar_pass(model, utts, opts.beam, per_utt);
    } else if (engine == "vectorized") {
      vectorized_pass(model, utts, opts.beam, opts.batch, phases, per_utt);
    } else if (engine == "scalar-multiworker") {
      multiworker_pass(model, utts, opts.beam, opts.workers, per_utt);
    } else {
      throw std::invalid_argument("unknown engine: " + engine);
    }
    if (measured) stats.pass_seconds.push_back(now_pass(t0));
  }
  return stats;
}

inline bool same_hypotheses(const DecodeResult& a, const DecodeResult& b,
                            double tol) {
  if (a.nbest.size() != b.nbest.size()) return false;
  for (std::size_t i = 0; i < a.nbest.size(); ++i) {
    if (a.nbest[i].labels != b.nbest[i].labels) return false;
    if (std::abs(a.nbest[i].score - b.nbest[i].score) > tol) return false;
  }
  return true;
}

}  // namespace bench_detail

/// Cross-checks the two engines on the run's utterance set: every utterance
/// decoded by the scalar reference, by the vectorized engine alone, and
/// inside the batched run must agree.
inline bool run_equivalence_check(const SyntheticModel& model,
                                  std::span<const ScoreMatrix> utts,
                                  const BenchOptions& opts) {
  const std::size_t n = utts.size();
  std::vector<DecodeResult> batched;
  batched.reserve(n);
  std::size_t i = 0;
  while (i < n) {
    const std::size_t take = std::min<std::size_t>(opts.batch, n - i);
    auto part =
        decode_batch_vectorized(model, utts.subspan(i, take), opts.beam);
    for (auto& r : part) batched.push_back(std::move(r));
    i += take;
  }
  for (std::size_t s = 0; s < n; ++s) {
    const DecodeResult scalar =
        decode_scalar_reference(model, utts[s], opts.beam);
    const auto solo = decode_batch_vectorized(
        model, utts.subspan(s, 1), opts.beam);
    if (!bench_detail::same_hypotheses(solo[0], scalar, 1e-9)) return false;
    if (!bench_detail::same_hypotheses(batched[s], scalar, 1e-6)) return false;
  }
  return true;
}

/// Times the requested engine (and, when it is not the scalar reference,
/// the scalar baseline for the speedup column). Returns rows in baseline,
/// engine order. Throws on verification failure only indirectly: the
/// equivalence field carries "failed" and timing rows are omitted.
inline BenchReport run_bench(const SyntheticModel& model,
                             std::span<const ScoreMatrix> utts,
                             const BenchOptions& opts) {
  opts.beam.validate();
  BenchReport report;
  std::uint64_t total_frames = 0;
  for (const ScoreMatrix& u : utts) total_frames += u.rows();
  const double audio_seconds =
      static_cast<double>(total_frames) * kFrameShiftSeconds;

  std::string equivalence = "skipped";
  if (opts.verify) {
    equivalence = run_equivalence_check(model, utts, opts) ? "ok" : "failed";
    if (equivalence == "failed") {
      BenchRow row;
      row.engine = opts.engine;
      row.batch = opts.batch;
      row.beam = opts.beam.beam;
      row.workers = opts.workers;
      row.ctc_weight = opts.beam.fusion.ctc_weight;
      row.lm_weight = opts.beam.fusion.lm_weight;
      row.vocab_size = model.spec.vocab_size;
      row.num_utts = static_cast<std::int64_t>(utts.size());
      row.audio_seconds = audio_seconds;
      row.equivalence = equivalence;
      report.rows.push_back(row);
      return report;  // verification failure suppresses timing
    }
  }

  auto make_row = [&](const std::string& engine, int batch, int workers,
                      const bench_detail::PassStats& stats) {
    BenchRow row;
    row.engine = engine;
    row.batch = batch;
    row.beam = opts.beam.beam;
    row.workers = workers;
    row.ctc_weight = opts.beam.fusion.ctc_weight;
    row.lm_weight = opts.beam.fusion.lm_weight;
    row.vocab_size = model.spec.vocab_size;
    row.num_utts = static_cast<std::int64_t>(utts.size());
    row.total_seconds = stats.median_pass();
    row.min_seconds = stats.min_pass();
    row.max_seconds = stats.max_pass();
    row.mean_ms_per_utt =
        1e3 * row.total_seconds / static_cast<double>(utts.size());
    row.median_ms_per_utt = 1e3 * stats.median_utt();
    row.audio_seconds = audio_seconds;
    row.rtf = real_time_factor(row.total_seconds, total_frames);
    row.equivalence = equivalence;
    row.phases = stats.phases;
    return row;
  };

  double scalar_median = 0.0;
  if (opts.engine != "scalar") {
    const auto baseline = bench_detail::run_engine(model, utts, opts, "scalar");
    BenchRow row = make_row("scalar", 1, 1, baseline);
    scalar_median = row.total_seconds;
    report.rows.push_back(std::move(row));
  }

  const auto stats = bench_detail::run_engine(model, utts, opts, opts.engine);
  BenchRow row = make_row(opts.engine, opts.batch, opts.workers, stats);
  if (opts.engine == "scalar") {
    row.speedup_vs_scalar = 1.0;
  } else {
    row.speedup_vs_scalar = scalar_median / row.total_seconds;
  }
  report.rows.push_back(std::move(row));
  return report;
}

// ---------------------------------------------------------------------------
// Report emission

namespace bench_detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace bench_detail

inline nlohmann::json report_to_json(const BenchReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const BenchRow& r : report.rows) {
    rows.push_back({{"engine", r.engine},
                    {"batch", r.batch},
                    {"beam", r.beam},
                    {"workers", r.workers},
                    {"ctc_weight", r.ctc_weight},
                    {"lm_weight", r.lm_weight},
                    {"vocab_size", r.vocab_size},
                    {"num_utts", r.num_utts},
                    {"total_seconds", r.total_seconds},
                    {"min_seconds", r.min_seconds},
                    {"max_seconds", r.max_seconds},
                    {"mean_ms_per_utt", r.mean_ms_per_utt},
                    {"median_ms_per_utt", r.median_ms_per_utt},
                    {"audio_seconds", r.audio_seconds},
                    {"rtf", r.rtf},
                    {"speedup_vs_scalar", r.speedup_vs_scalar},
                    {"equivalence", r.equivalence},
                    {"phase_encode_s", r.phases.encode},
                    {"phase_att_s", r.phases.att},
                    {"phase_lm_s", r.phases.lm},
                    {"phase_ctc_s", r.phases.ctc},
                    {"phase_prune_s", r.phases.prune},
                    {"phase_select_s", r.phases.select},
                    {"phase_other_s", r.phases.other}});
  }
  return nlohmann::json{{"schema", "vbeam-bench-report/1"}, {"rows", rows}};
}

inline const char* kCsvHeader =
    "engine,batch,beam,workers,ctc_weight,lm_weight,vocab_size,num_utts,"
    "total_seconds,min_seconds,max_seconds,mean_ms_per_utt,median_ms_per_utt,"
    "audio_seconds,rtf,speedup_vs_scalar,equivalence,phase_encode_s,"
    "phase_att_s,phase_lm_s,phase_ctc_s,phase_prune_s,phase_select_s,"
    "phase_other_s";

inline std::string emit_report(const BenchReport& report,
                               const std::string& format) {
  if (format == "json") {
    return report_to_json(report).dump(2) + "\n";
  }
  if (format != "csv") {
    throw std::invalid_argument("emit_report: format must be json or csv");
  }
  using bench_detail::fmt_double;
  std::ostringstream out;
  out << kCsvHeader << "\n";
  for (const BenchRow& r : report.rows) {
    out << r.engine << ',' << r.batch << ',' << r.beam << ',' << r.workers
        << ',' << fmt_double(r.ctc_weight) << ',' << fmt_double(r.lm_weight)
        << ',' << r.vocab_size << ',' << r.num_utts << ','
        << fmt_double(r.total_seconds) << ',' << fmt_double(r.min_seconds)
        << ',' << fmt_double(r.max_seconds) << ','
        << fmt_double(r.mean_ms_per_utt) << ','
        << fmt_double(r.median_ms_per_utt) << ','
        << fmt_double(r.audio_seconds) << ',' << fmt_double(r.rtf) << ','
        << fmt_double(r.speedup_vs_scalar) << ',' << r.equivalence << ','
        << fmt_double(r.phases.encode) << ',' << fmt_double(r.phases.att)
        << ',' << fmt_double(r.phases.lm) << ',' << fmt_double(r.phases.ctc)
        << ',' << fmt_double(r.phases.prune) << ','
        << fmt_double(r.phases.select) << ',' << fmt_double(r.phases.other)
        << "\n";
  }
  return out.str();
}

/// The standard desk-scale model: 83 input features, 128-wide encoder,
/// decoder and LM. |L| defaults to 30; 500 exercises the large-vocabulary
/// regime where CTC scoring dominates.
inline SyntheticModelSpec desk_model_spec(std::uint64_t seed,
                                          std::int32_t vocab_size = 30) {
  SyntheticModelSpec spec;
  spec.seed = seed;
  spec.d_feat = 83;
  spec.d_enc = 128;
  spec.d_dec = 128;
  spec.d_lm = 128;
  spec.vocab_size = vocab_size;
  return spec;
}

inline UtteranceSetSpec desk_utterance_spec(std::uint64_t seed,
                                            std::int32_t count = 100,
                                            std::int32_t t_min = 100,
                                            std::int32_t t_max = 500) {
  UtteranceSetSpec spec;
  spec.seed = seed;
  spec.count = count;
  spec.t_min = t_min;
  spec.t_max = t_max;
  spec.d_feat = 83;
  return spec;
}

}  // namespace vbeam

#endif  // VBEAM_BENCH_HPP
