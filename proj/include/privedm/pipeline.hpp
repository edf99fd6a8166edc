#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "privedm/esp.hpp"
#include "privedm/l1_protocol.hpp"
#include "privedm/labeling.hpp"

namespace privedm {

// Ordered key=value lines behind a leading schema line.
class Report {
 public:
  static constexpr int kSchema = 1;

  void add(std::string key, std::string value) { lines_.emplace_back(std::move(key), std::move(value)); }
  void add(std::string key, std::uint64_t v) { add(std::move(key), std::to_string(v)); }
  void add(std::string key, std::int64_t v) { add(std::move(key), std::to_string(v)); }
  void add(std::string key, int v) { add(std::move(key), std::to_string(v)); }
  void add_seconds(std::string key, double s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", s);
    add(std::move(key), std::string(buf));
  }
  void add_metrics(const std::string& prefix, const Metrics& m) {
    std::ostringstream os;
    m.write(os, prefix);
    std::string line;
    std::istringstream is(os.str());
    while (std::getline(is, line)) {
      const auto eq = line.find('=');
      add(line.substr(0, eq), line.substr(eq + 1));
    }
  }

  const std::vector<std::pair<std::string, std::string>>& lines() const noexcept { return lines_; }

  std::string get(const std::string& key) const {
    for (const auto& [k, v] : lines_) {
      if (k == key) return v;
    }
    return {};
  }

  void write(std::ostream& os) const {
    os << "schema=" << kSchema << '\n';
    for (const auto& [k, v] : lines_) os << k << '=' << v << '\n';
  }

  std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

struct EdmRun {
  Phase1Result a;
  Phase1Result b;
  std::uint64_t labels_a = 0;  // |[T_A]|
  std::uint64_t labels_b = 0;
  std::uint64_t l1 = 0;
  Transcript phase1;
  Transcript phase2;
  Metrics metrics1;
  Metrics metrics2;
  PartyTimes times_a;
  PartyTimes times_b;
  double parse_a = 0;
  double parse_b = 0;
};

// Phase 1 + Phase 2 on two texts. Each party parses its own text; A ends
// with the L1 distance of the two characteristic vectors over final labels.
template <he::TwoLevelScheme S>
EdmRun run_edm(std::span<const Symbol> text_a, std::span<const Symbol> text_b, const Phase1Config& cfg,
               EndpointPair& channels, bool keep_frames = false) {
  if (!cfg.reveal_union_size) throw ConfigError("the L1 phase needs n; keep the union size revealed");
  cfg.resolved<S>().template validate<S>();
  const RollingHash h(HashConfig{cfg.m, cfg.hash_base});
  EdmRun run;
  auto party = [&](Party who, Endpoint& ep, std::span<const Symbol> text, PartyLog& log1, PartyLog& log2,
                   Phase1Result& out, std::uint64_t& labels, PartyTimes& times, double& parse) {
    const auto t0 = detail::Clock::now();
    const EspTree tree = build_esp_tree(text, h);
    const LabelSet mine = tentative_label_set(tree);
    const CharacteristicVector cv = characteristic_vector(tree);
    parse = detail::seconds_since(t0);
    labels = mine.size();
    PartySession<S> s(who, ep, log1, cfg, keep_frames);
    out = s.relabel(mine);
    s.channel().set_log(log2);
    const auto l1 = run_phase2_party<S>(s, rank_vector(cv, out, out.n));
    if (l1) run.l1 = *l1;
    times = s.times();
  };
  run_two_party(
      *channels.first, *channels.second,
      [&](Endpoint& ep) {
        party(Party::A, ep, text_a, run.phase1.a, run.phase2.a, run.a, run.labels_a, run.times_a, run.parse_a);
      },
      [&](Endpoint& ep) {
        party(Party::B, ep, text_b, run.phase1.b, run.phase2.b, run.b, run.labels_b, run.times_b, run.parse_b);
      });
  run.metrics1 = metrics_snapshot(run.phase1);
  run.metrics2 = metrics_snapshot(run.phase2);
  return run;
}

inline void add_config(Report& r, std::string_view backend, const Phase1Config& cfg) {
  r.add("backend", std::string(backend));
  r.add("m", cfg.m);
  r.add("b", cfg.hash_base);
  r.add("sigma", cfg.sigma);
  r.add("n_cap", cfg.cap());
  r.add("message_bound", cfg.message_bound());
  r.add("security_bits", cfg.security_bits);
  r.add("pad", std::string(cfg.pad ? "1" : "0"));
  r.add("seed", cfg.seed);
}

inline void add_times(Report& r, const std::string& who, const PartyTimes& t) {
  r.add_seconds("time." + who + ".setup", t.setup);
  r.add_seconds("time." + who + ".preprocess", t.preprocess);
  r.add_seconds("time." + who + ".relabel", t.relabel);
  r.add_seconds("time." + who + ".phase2", t.phase2);
}

// Wall-clock seconds spent relabeling per label, both parties together.
inline double relabel_per_label(const PartyTimes& a, const PartyTimes& b) {
  const auto labels = a.relabeled + b.relabeled;
  return labels == 0 ? 0.0 : (a.relabel + b.relabel) / static_cast<double>(labels);
}

// `cfg` must already be resolved for the backend.
inline Report phase1_report(std::string_view backend, const Phase1Config& cfg, const Phase1Run& run,
                            std::uint64_t labels_a, std::uint64_t labels_b, bool timings) {
  Report r;
  r.add("command", std::string("phase1"));
  add_config(r, backend, cfg);
  r.add("labels_a", labels_a);
  r.add("labels_b", labels_b);
  r.add("n", run.a.n);
  r.add("rounds", run.metrics.rounds);
  r.add("bytes_a_to_b", run.metrics.bytes_a_to_b);
  r.add("bytes_b_to_a", run.metrics.bytes_b_to_a);
  r.add_metrics("phase1.", run.metrics);
  if (timings) {
    add_times(r, "a", run.times_a);
    add_times(r, "b", run.times_b);
    r.add_seconds("time.relabel_per_label", relabel_per_label(run.times_a, run.times_b));
  }
  return r;
}

inline Report edm_report(std::string_view backend, const Phase1Config& cfg, const EdmRun& run, bool timings) {
  Report r;
  r.add("command", std::string("edm"));
  add_config(r, backend, cfg);
  r.add("labels_a", run.labels_a);
  r.add("labels_b", run.labels_b);
  r.add("n", run.a.n);
  r.add("rounds", run.metrics1.rounds + run.metrics2.rounds);
  r.add("bytes_a_to_b", run.metrics1.bytes_a_to_b + run.metrics2.bytes_a_to_b);
  r.add("bytes_b_to_a", run.metrics1.bytes_b_to_a + run.metrics2.bytes_b_to_a);
  r.add("l1", run.l1);
  r.add_metrics("phase1.", run.metrics1);
  r.add_metrics("phase2.", run.metrics2);
  if (timings) {
    r.add_seconds("time.a.parse", run.parse_a);
    r.add_seconds("time.b.parse", run.parse_b);
    add_times(r, "a", run.times_a);
    add_times(r, "b", run.times_b);
    r.add_seconds("time.relabel_per_label", relabel_per_label(run.times_a, run.times_b));
  }
  return r;
}

}  // namespace privedm
