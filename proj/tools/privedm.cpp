#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "privedm/privedm.hpp"

using namespace privedm;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kProtocol = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::uint64_t m = 0;
  std::uint64_t b = 256;
  int security_bits = he::kDefaultSecurityBits;
  std::string backend = "clear";
  int sigma = -1;
  std::uint64_t n_cap = 0;
  bool pad = false;
  std::string seed;
  std::string transport = "inproc";
  bool fasta = false;
  bool auto_m = false;
  bool timings = false;
};

std::string one_line(std::string s) {
  for (auto& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

Text read_input(const std::string& path, bool fasta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (!fasta) return to_text(raw);
  // Drop header/comment lines and all whitespace.
  Text out;
  std::istringstream lines(raw);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && (line[0] == '>' || line[0] == ';')) continue;
    for (const unsigned char c : line) {
      if (!std::isspace(c)) out.push_back(c);
    }
  }
  return out;
}

std::uint64_t resolve_seed(const Options& o) {
  std::string s = o.seed;
  if (s.empty()) {
    if (const char* env = std::getenv("PRIVEDM_SEED")) s = env;
  }
  if (s.empty()) return fresh_seed();
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used, 0);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("seed must be an unsigned integer, got '" + s + "'");
  }
}

// A public upper bound on |T_A u T_B| from the input lengths alone: a tree
// over N symbols has at most 2N - 1 nodes.
std::uint64_t n_estimate(const Text& a, const Text& b) { return 2 * (a.size() + b.size()); }

Phase1Config make_config(const Options& o, std::uint64_t n_est) {
  Phase1Config c;
  if (o.m != 0) {
    c.m = o.m;
  } else if (o.auto_m) {
    c.m = min_modulus(std::max<std::uint64_t>(n_est, 1), 0.05);
  } else {
    c.m = default_modulus(n_est);
  }
  c.hash_base = o.b;
  c.sigma = o.sigma;
  c.n_cap = o.n_cap;
  c.pad = o.pad;
  c.security_bits = o.security_bits;
  c.seed = resolve_seed(o);
  return c;
}

EndpointPair make_channels(const std::string& which) {
  if (which == "inproc") return make_inproc_pair();
  if (which == "socket") return make_socket_pair();
  if (which.rfind("socket:", 0) == 0) {
    const std::string rest = which.substr(7);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) throw UsageError("transport must be socket:HOST:PORT");
    int port = 0;
    try {
      port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw UsageError("bad port in transport '" + which + "'");
    }
    if (port < 0 || port > 65535) throw UsageError("bad port in transport '" + which + "'");
    return make_socket_pair(rest.substr(0, colon), static_cast<std::uint16_t>(port));
  }
  throw UsageError("unknown transport '" + which + "'");
}

template <class F>
int with_backend(const std::string& backend, F&& f) {
  if (backend == "clear") return f.template operator()<he::ClearScheme>();
  if (backend == "crypto") return f.template operator()<he::BgnScheme>();
  throw UsageError("unknown backend '" + backend + "'");
}

void print_table(std::ostream& os, const Report& r, std::initializer_list<const char*> keys) {
  for (const char* k : keys) os << "  " << std::left << std::setw(14) << k << r.get(k) << '\n';
}

void add_common(CLI::App* sub, Options& o, bool protocol) {
  sub->add_option("--m", o.m, "hash modulus / bit vector length (default: table modulus for the input size)");
  sub->add_option("--b", o.b, "hash base (alphabet bound)");
  sub->add_flag("--fasta", o.fasta, "strip '>' header lines and whitespace from inputs");
  if (!protocol) return;
  sub->add_flag("--auto-m", o.auto_m, "pick the smallest modulus satisfying the conflict bound at p = 0.05");
  sub->add_option("--security-bits", o.security_bits, "key size: 128, 256 or 512");
  sub->add_option("--backend", o.backend, "clear or crypto")->check(CLI::IsMember({"clear", "crypto"}));
  sub->add_option("--sigma", o.sigma, "blind range is n_cap * 2^sigma (default: 30 clear, 16 crypto)");
  sub->add_option("--n-cap", o.n_cap, "public bound on the number of distinct labels (default: m)");
  sub->add_flag("--pad", o.pad, "pad rank queries to n_cap");
  sub->add_option("--seed", o.seed, "random seed (env PRIVEDM_SEED; default: fresh)");
  sub->add_option("--transport", o.transport, "inproc, socket or socket:HOST:PORT");
  sub->add_flag("--timings", o.timings, "add wall-clock timings to the report");
}

int cmd_hash_params(std::uint64_t n, double p, std::uint64_t m) {
  Report r;
  r.add("command", std::string("hash-params"));
  r.add("n", n);
  std::ostringstream ps;
  ps << p;
  r.add("p", ps.str());
  const auto mm = min_modulus(n, p);
  r.add("min_modulus", mm);
  r.add("min_modulus_exact", min_modulus_exact(n, p));
  r.add("default_modulus", default_modulus(n));
  std::ostringstream cp;
  cp << std::setprecision(9) << conflict_probability(n, mm);
  r.add("conflict_probability", cp.str());
  if (m != 0) {
    r.add("m", m);
    r.add("satisfies_bound", std::string(check_bound(n, p, m) ? "1" : "0"));
    std::ostringstream c2;
    c2 << std::setprecision(9) << conflict_probability(n, m);
    r.add("conflict_probability_at_m", c2.str());
  }
  r.write(std::cout);
  return kOk;
}

int cmd_parse(const std::string& file, const Options& o) {
  const Text t = read_input(file, o.fasta);
  const std::uint64_t m = o.m != 0 ? o.m : default_modulus(2 * t.size());
  const EspTree tree = build_esp_tree(t, RollingHash(HashConfig{m, o.b}));
  Report r;
  r.add("command", std::string("parse"));
  r.add("m", m);
  r.add("b", o.b);
  r.add("length", static_cast<std::uint64_t>(t.size()));
  r.add("nodes", static_cast<std::uint64_t>(tree.size()));
  r.add("height", static_cast<std::uint64_t>(tree.height()));
  r.add("labels", static_cast<std::uint64_t>(tentative_label_set(tree).size()));
  r.write(std::cout);
  // the tree follows the report after one blank line
  std::cout << '\n' << tree.dump();
  return kOk;
}

int cmd_phase1(const std::string& fa, const std::string& fb, const Options& o) {
  const Text a = read_input(fa, o.fasta);
  const Text b = read_input(fb, o.fasta);
  const Phase1Config base = make_config(o, n_estimate(a, b));
  return with_backend(o.backend, [&]<class S>() {
    const Phase1Config cfg = base.resolved<S>();
    cfg.validate<S>();
    auto channels = make_channels(o.transport);
    const RollingHash h(HashConfig{cfg.m, cfg.hash_base});
    const LabelSet la = tentative_label_set(build_esp_tree(a, h));
    const LabelSet lb = tentative_label_set(build_esp_tree(b, h));
    const Phase1Run run = run_phase1<S>(la, lb, cfg, channels);
    const Report r = phase1_report(S::name, cfg, run, la.size(), lb.size(), o.timings);
    r.write(std::cout);
    std::cerr << "phase 1 (" << S::name << ")\n";
    print_table(std::cerr, r, {"m", "labels_a", "labels_b", "n", "rounds", "bytes_a_to_b", "bytes_b_to_a"});
    return kOk;
  });
}

int cmd_edm(const std::string& fa, const std::string& fb, const Options& o) {
  const Text a = read_input(fa, o.fasta);
  const Text b = read_input(fb, o.fasta);
  const Phase1Config base = make_config(o, n_estimate(a, b));
  return with_backend(o.backend, [&]<class S>() {
    const Phase1Config cfg = base.resolved<S>();
    cfg.validate<S>();
    auto channels = make_channels(o.transport);
    const EdmRun run = run_edm<S>(a, b, cfg, channels);
    const Report r = edm_report(S::name, cfg, run, o.timings);
    r.write(std::cout);
    std::cerr << "approximate edm (" << S::name << ")\n";
    print_table(std::cerr, r, {"m", "n", "l1", "rounds", "bytes_a_to_b", "bytes_b_to_a"});
    return kOk;
  });
}

int cmd_oracle_edm(const std::string& fa, const std::string& fb, unsigned cap, const Options& o) {
  const Text a = read_input(fa, o.fasta);
  const Text b = read_input(fb, o.fasta);
  const std::string_view sa(reinterpret_cast<const char*>(a.data()), a.size());
  const std::string_view sb(reinterpret_cast<const char*>(b.data()), b.size());
  const ApproximationReport ar = approximation_report(sa, sb, cap);
  Report r;
  r.add("command", std::string("oracle-edm"));
  r.add("cap", static_cast<std::uint64_t>(cap));
  r.add("edm", ar.edm.value ? std::to_string(*ar.edm.value) : ">" + std::to_string(cap));
  r.add("levenshtein", ar.levenshtein);
  r.add("l1", ar.l1);
  if (const auto ratio = ar.ratio()) {
    std::ostringstream os;
    os << std::setprecision(6) << *ratio;
    r.add("ratio", os.str());
  } else {
    r.add("ratio", std::string("na"));
  }
  r.add("lower_bound_holds", std::string(ar.lower_bound_holds() ? "1" : "0"));
  r.write(std::cout);
  return kOk;
}

// Label sets with |A u B| = n, each label in A only, B only, or both.
std::pair<LabelSet, LabelSet> synthetic_labels(std::uint64_t n, std::uint64_t m, Rng& rng) {
  if (n > m) throw ConfigError("bench needs n <= m, got n = " + std::to_string(n) + ", m = " + std::to_string(m));
  std::vector<std::uint64_t> all(m);
  for (std::uint64_t i = 0; i < m; ++i) all[i] = i;
  for (std::uint64_t i = 0; i < n; ++i) std::swap(all[i], all[i + uniform_below(rng, m - i)]);
  std::vector<std::uint64_t> a, b;
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto side = uniform_below(rng, 3);
    if (side != 1) a.push_back(all[i]);
    if (side != 0) b.push_back(all[i]);
  }
  return {LabelSet(std::move(a)), LabelSet(std::move(b))};
}

int cmd_bench(const std::vector<std::uint64_t>& ns, const Options& o) {
  const std::uint64_t seed = resolve_seed(o);
  return with_backend(o.backend, [&]<class S>() {
    Report r;
    r.add("command", std::string("bench"));
    r.add("backend", std::string(S::name));
    r.add("seed", seed);
    std::ostringstream table;
    table << std::left << std::setw(8) << "n" << std::setw(10) << "m" << std::setw(18) << "preprocessing_s"
          << "relabel_per_label_s\n";
    for (const auto n : ns) {
      Options oo = o;
      oo.seed = std::to_string(seed);
      Phase1Config cfg = make_config(oo, n).resolved<S>();
      cfg.validate<S>();
      Rng rng(derive_seed(seed, "bench-labels-" + std::to_string(n)));
      const auto [la, lb] = synthetic_labels(n, cfg.m, rng);
      auto channels = make_channels(o.transport);
      const Phase1Run run = run_phase1<S>(la, lb, cfg, channels);
      if (run.a.n != n) throw ProtocolError("bench union size mismatch");
      const double pre = std::max(run.times_a.setup + run.times_a.preprocess, run.times_b.setup + run.times_b.preprocess);
      const double per = relabel_per_label(run.times_a, run.times_b);
      const std::string key = "bench.n" + std::to_string(n);
      r.add(key + ".m", cfg.m);
      r.add(key + ".rounds", run.metrics.rounds);
      r.add(key + ".bytes", run.metrics.total_bytes());
      r.add_seconds(key + ".preprocessing", pre);
      r.add_seconds(key + ".relabel_per_label", per);
      table << std::left << std::setw(8) << n << std::setw(10) << cfg.m << std::setw(18) << std::fixed
            << std::setprecision(4) << pre << std::setprecision(6) << per << '\n';
    }
    r.write(std::cout);
    std::cerr << table.str();
    return kOk;
  });
}

void fail_line(const char* kind, const std::string& reason, char party = 0) {
  std::cerr << "error=" << kind;
  if (party) std::cerr << " party=" << party;
  std::cerr << " reason=" << one_line(reason) << '\n';
}

int classify(const std::exception_ptr& e, char party) {
  try {
    std::rethrow_exception(e);
  } catch (const PartyFailure& f) {
    return classify(f.cause(), f.party());
  } catch (const UsageError& ex) {
    fail_line("usage", ex.what(), party);
    return kUsage;
  } catch (const ConfigError& ex) {
    fail_line("config", ex.what(), party);
    return kConfig;
  } catch (const he::UnsupportedKeySize& ex) {
    fail_line("config", ex.what(), party);
    return kConfig;
  } catch (const EmptyTextError& ex) {
    fail_line("config", ex.what(), party);
    return kConfig;
  } catch (const std::invalid_argument& ex) {
    fail_line("config", ex.what(), party);
    return kConfig;
  } catch (const std::exception& ex) {
    fail_line("protocol", ex.what(), party);
    return kProtocol;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate edit distance with moves between two private strings"};
  app.require_subcommand(1);
  Options o;

  std::uint64_t hp_n = 0;
  double hp_p = 0.05;
  std::uint64_t hp_m = 0;
  auto* hp = app.add_subcommand("hash-params", "modulus selection for a label count and conflict threshold");
  hp->add_option("--n", hp_n, "number of labels")->required();
  hp->add_option("--p", hp_p, "conflict probability threshold in (0,1)");
  hp->add_option("--m", hp_m, "also check this modulus");

  std::string file_a, file_b;
  auto* parse = app.add_subcommand("parse", "print the parse tree of a file");
  parse->add_option("FILE", file_a)->required();
  add_common(parse, o, false);

  auto* p1 = app.add_subcommand("phase1", "run the consistent relabeling between two files");
  p1->add_option("FILE_A", file_a)->required();
  p1->add_option("FILE_B", file_b)->required();
  add_common(p1, o, true);

  auto* edm = app.add_subcommand("edm", "relabel, then compute the L1 distance of the characteristic vectors");
  edm->add_option("FILE_A", file_a)->required();
  edm->add_option("FILE_B", file_b)->required();
  add_common(edm, o, true);

  unsigned cap = 4;
  auto* oe = app.add_subcommand("oracle-edm", "exact EDM (capped), Levenshtein and conflict-free L1");
  oe->add_option("FILE_A", file_a)->required();
  oe->add_option("FILE_B", file_b)->required();
  oe->add_option("--cap", cap, "search depth limit");
  oe->add_flag("--fasta", o.fasta, "strip '>' header lines and whitespace from inputs");

  std::vector<std::uint64_t> bench_ns{100, 1000};
  auto* bench = app.add_subcommand("bench", "relabeling cost on synthetic label sets");
  bench->add_option("--n", bench_ns, "union sizes")->expected(1, -1);
  add_common(bench, o, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail_line("usage", e.what());
    return kUsage;
  }

  try {
    if (*hp) return cmd_hash_params(hp_n, hp_p, hp_m);
    if (*parse) return cmd_parse(file_a, o);
    if (*p1) return cmd_phase1(file_a, file_b, o);
    if (*edm) return cmd_edm(file_a, file_b, o);
    if (*oe) return cmd_oracle_edm(file_a, file_b, cap, o);
    if (*bench) return cmd_bench(bench_ns, o);
  } catch (...) {
    return classify(std::current_exception(), 0);
  }
  return kUsage;
}
