#include "pppa/cli.hpp"

#include "pppa/classify.hpp"
#include "pppa/instance_gen.hpp"
#include "pppa/matrix_core.hpp"
#include "pppa/oracle.hpp"
#include "pppa/pivot_engine.hpp"
#include "pppa/qpb_io.hpp"
#include "pppa/reductions.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace pppa::cli {

namespace {

std::string join(const Vector& v) {
  std::string s;
  for (Index i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v(i));
  }
  return s;
}

std::string join(const IndexSet& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i] + 1);
  }
  return s;
}

const char* yes_no(bool b) { return b ? "true" : "false"; }

struct MethodSpec {
  enum class Kind { Auto, Pd, Psd, Sbar, Sbar1, SbarK } kind = Kind::Auto;
  int k = 0;
};

MethodSpec parse_method(const std::string& s) {
  MethodSpec m;
  if (s == "auto") m.kind = MethodSpec::Kind::Auto;
  else if (s == "pd") m.kind = MethodSpec::Kind::Pd;
  else if (s == "psd") m.kind = MethodSpec::Kind::Psd;
  else if (s == "sbar") m.kind = MethodSpec::Kind::Sbar;
  else if (s == "sbar1") m.kind = MethodSpec::Kind::Sbar1;
  else if (s.rfind("sbark=", 0) == 0) {
    m.kind = MethodSpec::Kind::SbarK;
    try {
      std::size_t used = 0;
      m.k = std::stoi(s.substr(6), &used);
      if (used != s.size() - 6 || m.k < 0) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--method", "bad level in '" + s + "'");
    }
  } else {
    throw CLI::ValidationError("--method", "unknown method '" + s + "'");
  }
  return m;
}

std::optional<int> declared_level(const QpbFile& file) {
  auto it = file.header.find("k");
  if (it == file.header.end()) return std::nullopt;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Parametric vector p = (M + Mbar) d / 2 for an M with psd comparison matrix.
Vector parametric_vector(const QpInstance& inst, const Tolerances& tol) {
  if (!is_in_sbar_plus(inst.m, tol.psd)) {
    throw Error(ErrorKind::ClassificationFailed, "comparison matrix is not positive semidefinite");
  }
  return build_parametric_vector(inst.m, dominance_vector(inst.m, tol), tol);
}

SolveOutcome run_solver(const QpbFile& file, const MethodSpec& method, const Tolerances& tol) {
  const QpInstance& inst = file.instance;
  SbarOptions opts;
  opts.engine.tol = tol;
  try {
    switch (method.kind) {
      case MethodSpec::Kind::Pd:
        return certify(inst, solve_pd(inst, parametric_vector(inst, tol), opts.engine), tol);
      case MethodSpec::Kind::Psd:
        return certify(inst, solve_psd(inst, parametric_vector(inst, tol), opts.engine), tol);
      case MethodSpec::Kind::Sbar:
        return solve_sbar(inst, opts);
      case MethodSpec::Kind::Sbar1:
        return solve_sbar_n1(inst, opts);
      case MethodSpec::Kind::SbarK:
        return solve_sbar_nk(inst, method.k, opts);
      case MethodSpec::Kind::Auto:
        break;
    }
    if (is_in_sbar_plus(inst.m, tol.psd)) {
      if (is_pd(inst.m, tol.pivot)) {
        const Vector p = parametric_vector(inst, tol);
        if (p.minCoeff() > 0.0) return certify(inst, solve_pd(inst, p, opts.engine), tol);
      }
      return solve_sbar(inst, opts);
    }
    if (std::optional<int> k = declared_level(file)) return solve_sbar_nk(inst, *k, opts);
    if (inst.size() <= 12 && is_sbar_nk(inst.m, 1, tol.psd)) return solve_sbar_n1(inst, opts);
    return SolveOutcome::failure(ErrorKind::ClassificationFailed,
                                 "matrix is not in a supported class and no level is declared");
  } catch (const Error& e) {
    return SolveOutcome::failure(e.kind(), e.what());
  }
}

int exit_code(const SolveOutcome& out) {
  switch (out.status) {
    case SolveStatus::Optimal: return kExitOptimal;
    case SolveStatus::Unbounded: return kExitUnbounded;
    case SolveStatus::Error: return kExitError;
  }
  return kExitError;
}

void print_outcome(std::ostream& os, const SolveOutcome& out) {
  os << "status=" << to_string(out.status);
  if (out.status == SolveStatus::Optimal) {
    os << " objective=" << format_double(*out.objective) << " x=" << join(*out.x) << '\n';
  } else if (out.status == SolveStatus::Unbounded) {
    os << " ray=" << join(out.ray->direction) << '\n';
  } else {
    os << " reason=" << (out.error ? to_string(*out.error) : "Unknown") << '\n';
    os << "message=" << out.message << '\n';
  }
  os << "pivots=" << out.stats.pivots << " two_by_two_pivots=" << out.stats.two_by_two_pivots
     << " subproblems=" << out.stats.subproblems << " reductions=" << out.stats.reductions << '\n';
}

struct BenchRow {
  Index n;
  double rho;
  std::uint64_t seed;
  std::string status;
  Index pivots = 0;
  Index two_by_two = 0;
  double time_ms = 0.0;
  double kkt = 0.0;
};

BenchRow bench_one(Family family, Index n, double rho, std::uint64_t seed, int k, const MethodSpec& method,
                   const Tolerances& tol) {
  BenchRow row{n, rho, seed, "error"};
  QpbFile file;
  try {
    file.instance = generate(GenSpec{n, rho, seed, family, k});
  } catch (const Error& e) {
    row.status = "generation_failed";
    return row;
  }
  if (family == Family::SbarNk) file.header["k"] = std::to_string(k);
  const auto t0 = std::chrono::steady_clock::now();
  const SolveOutcome out = run_solver(file, method, tol);
  const auto t1 = std::chrono::steady_clock::now();
  row.time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  row.status = to_string(out.status);
  row.pivots = out.stats.pivots;
  row.two_by_two = out.stats.two_by_two_pivots;
  row.kkt = out.x ? kkt_residual(file.instance, *out.x) : 0.0;
  return row;
}

}  // namespace

Tolerances parse_tolerances(const std::string& text, Tolerances base) {
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size() || !(v > 0.0)) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "bad tolerance '" + s + "'");
    }
  };
  if (text.find('=') == std::string::npos) {
    base.kkt = base.cert = number(text);
    return base;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, "bad tolerance item '" + item + "'");
    const std::string key = item.substr(0, eq);
    const double v = number(item.substr(eq + 1));
    if (key == "pivot") base.pivot = v;
    else if (key == "psd") base.psd = v;
    else if (key == "factor") base.factor = v;
    else if (key == "ratio") base.ratio = v;
    else if (key == "kernel") base.kernel = v;
    else if (key == "positive") base.positive = v;
    else if (key == "cert") base.cert = v;
    else if (key == "kkt") base.kkt = v;
    else throw Error(ErrorKind::InvalidArgument, "unknown tolerance '" + key + "'");
  }
  return base;
}

Tolerances default_tolerances() {
  const char* env = std::getenv("PPPA_TOL");
  if (env == nullptr || *env == '\0') return {};
  return parse_tolerances(env);
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Parametric principal pivoting solver for box-constrained convex QPs", "pppa"};
  app.require_subcommand(1);

  std::string tol_text;
  std::string path;
  std::string method_text = "auto";
  std::string out_path;
  auto* solve = app.add_subcommand("solve", "Solve an instance");
  solve->add_option("file", path, "QPB instance")->required();
  solve->add_option("--method", method_text, "auto|pd|psd|sbar|sbar1|sbark=K");
  solve->add_option("--tol", tol_text, "Tolerance override (number or name=value list)");
  solve->add_option("--out", out_path, "Write the result here instead of stdout");

  int max_k = 2;
  auto* classify_cmd = app.add_subcommand("classify", "Report matrix class membership");
  classify_cmd->add_option("file", path, "QPB instance")->required();
  classify_cmd->add_option("--max-k", max_k, "Largest level searched");
  classify_cmd->add_option("--tol", tol_text, "Tolerance override");

  std::string family_text = "sbar_random";
  Index n = 0;
  double rho = 0.5;
  std::uint64_t seed = 0;
  int k = 1;
  auto* gen = app.add_subcommand("generate", "Write a random instance");
  gen->add_option("--family", family_text, "sbar_random|tridiagonal|sbar_nk");
  gen->add_option("--n", n, "Dimension")->required();
  gen->add_option("--rho", rho, "Off-diagonal density");
  gen->add_option("--seed", seed, "Seed");
  gen->add_option("--k", k, "Level for sbar_nk");
  gen->add_option("--out", out_path, "Output file")->required();

  bool use_oracle = false;
  auto* verify = app.add_subcommand("verify", "Solve and check the certificate");
  verify->add_option("file", path, "QPB instance")->required();
  verify->add_flag("--oracle", use_oracle, "Cross-check with active-set enumeration (n <= 10)");
  verify->add_option("--method", method_text, "Solver method");
  verify->add_option("--tol", tol_text, "Tolerance override");

  std::vector<Index> n_list;
  std::vector<double> rho_list{0.5};
  int reps = 1;
  int jobs = 1;
  std::string csv_path;
  auto* bench = app.add_subcommand("bench", "Benchmark over generated instances");
  bench->add_option("--family", family_text, "sbar_random|tridiagonal|sbar_nk");
  bench->add_option("--n-list", n_list, "Dimensions")->required()->delimiter(',');
  bench->add_option("--rho-list", rho_list, "Densities")->delimiter(',');
  bench->add_option("--reps", reps, "Instances per (n, rho)")->check(CLI::PositiveNumber);
  bench->add_option("--seed", seed, "Base seed; repetition r uses seed + r");
  bench->add_option("--k", k, "Level for sbar_nk");
  bench->add_option("--method", method_text, "Solver method");
  bench->add_option("--tol", tol_text, "Tolerance override");
  bench->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--csv", csv_path, "CSV output file (stdout when omitted)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  Tolerances tol;
  MethodSpec method;
  try {
    tol = default_tolerances();
    if (!tol_text.empty()) tol = parse_tolerances(tol_text, tol);
    method = parse_method(method_text);
  } catch (const std::exception& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  auto load = [&](QpbFile& file) {
    try {
      file = read_qpb_file(path);
      return true;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return false;
    }
  };

  if (*solve) {
    QpbFile file;
    if (!load(file)) return kExitError;
    const SolveOutcome result = run_solver(file, method, tol);
    if (out_path.empty()) {
      print_outcome(out, result);
    } else {
      std::ofstream os(out_path);
      if (!os) {
        err << "error: cannot write '" << out_path << "'\n";
        return kExitError;
      }
      print_outcome(os, result);
    }
    return exit_code(result);
  }

  if (*classify_cmd) {
    QpbFile file;
    if (!load(file)) return kExitError;
    try {
      const ClassReport r = classify(file.instance.m, max_k, tol);
      out << "n=" << file.instance.size() << '\n';
      out << "is_symmetric=" << yes_no(r.is_symmetric) << '\n';
      out << "is_z=" << yes_no(r.is_z) << '\n';
      out << "is_psd=" << yes_no(r.is_psd) << '\n';
      out << "is_pd=" << yes_no(r.is_pd) << '\n';
      out << "is_sbar_plus=" << yes_no(r.is_sbar_plus) << '\n';
      out << "is_irreducible=" << yes_no(r.is_irreducible) << '\n';
      out << "blocks=" << r.blocks.size() << '\n';
      out << "k_level=" << (r.k_level ? std::to_string(*r.k_level) : std::string("unknown")) << '\n';
      if (r.d) out << "d=" << join(*r.d) << '\n';
      if (r.p) out << "p=" << join(*r.p) << '\n';
      for (std::size_t b = 0; b < r.blocks.size() && r.blocks.size() > 1; ++b) {
        out << "block" << b + 1 << '=' << join(r.blocks[b]) << '\n';
      }
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return kExitError;
    }
    return 0;
  }

  if (*gen) {
    try {
      const Family family = parse_family(family_text);
      QpbFile file;
      file.instance = generate(GenSpec{n, rho, seed, family, k});
      file.header["family"] = to_string(family);
      file.header["seed"] = std::to_string(seed);
      file.header["rho"] = format_double(rho);
      file.header["generator-id"] = kGeneratorId;
      if (family == Family::SbarNk) file.header["k"] = std::to_string(k);
      write_qpb_file(out_path, file);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return e.kind() == ErrorKind::InvalidArgument ? kExitUsage : kExitError;
    }
    return 0;
  }

  if (*verify) {
    QpbFile file;
    if (!load(file)) return kExitError;
    const QpInstance& inst = file.instance;
    const SolveOutcome result = run_solver(file, method, tol);
    print_outcome(out, result);
    bool ok = result.status != SolveStatus::Error;
    const double qscale = 1.0 + inf_norm(inst.q);
    if (result.status == SolveStatus::Optimal) {
      const double res = kkt_residual(inst, *result.x);
      const bool pass = res <= tol.kkt * qscale;
      out << "kkt_residual=" << format_double(res) << " kkt_check=" << (pass ? "pass" : "fail") << '\n';
      ok = ok && pass;
    } else if (result.status == SolveStatus::Unbounded) {
      const bool pass = recession_check(inst, result.ray->direction);
      out << "recession_check=" << (pass ? "pass" : "fail") << '\n';
      ok = ok && pass;
    }
    if (use_oracle) {
      if (inst.size() > 10) {
        out << "oracle=skipped\n";
      } else {
        const OracleResult o = enumerate_active_sets(inst);
        bool agree = false;
        if (o.status == OracleStatus::Optimal && result.status == SolveStatus::Optimal) {
          agree = std::abs(o.objective - *result.objective) <= 1e-8 * (1.0 + std::abs(o.objective));
        } else if (o.status == OracleStatus::Unbounded && result.status == SolveStatus::Unbounded) {
          agree = true;
        }
        out << "oracle_status=" << (o.status == OracleStatus::Optimal     ? "optimal"
                                    : o.status == OracleStatus::Unbounded ? "unbounded"
                                                                          : "no_kkt_point");
        if (o.status == OracleStatus::Optimal) out << " oracle_objective=" << format_double(o.objective);
        out << " oracle_check=" << (agree ? "pass" : "fail") << '\n';
        ok = ok && agree;
      }
    }
    out << "verify=" << (ok ? "pass" : "fail") << '\n';
    return ok ? 0 : kExitError;
  }

  // bench
  Family family;
  try {
    family = parse_family(family_text);
  } catch (const Error& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }
  struct Task {
    Index n;
    double rho;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (Index nn : n_list) {
    for (double r : rho_list) {
      for (int rep = 0; rep < reps; ++rep) tasks.push_back({nn, r, seed + static_cast<std::uint64_t>(rep)});
    }
  }
  std::vector<BenchRow> rows(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      rows[t] = bench_one(family, tasks[t].n, tasks[t].rho, tasks[t].seed, k, method, tol);
    }
  };
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::ofstream file_out;
  if (!csv_path.empty()) {
    file_out.open(csv_path);
    if (!file_out) {
      err << "error: cannot write '" << csv_path << "'\n";
      return kExitError;
    }
  }
  std::ostream& os = csv_path.empty() ? out : file_out;
  os << kBenchHeader << '\n';
  for (const BenchRow& r : rows) {
    os << r.n << ',' << format_double(r.rho) << ',' << r.seed << ',' << r.status << ',' << r.pivots << ','
       << r.two_by_two << ',' << format_double(r.time_ms) << ',' << format_double(r.kkt) << '\n';
  }
  return 0;
}

}  // namespace pppa::cli
