#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adlbr/imageio.hpp"
#include "adlbr/lattice.hpp"
#include "adlbr/operator.hpp"
#include "adlbr/stencil.hpp"
#include "adlbr/synthetic.hpp"
#include "adlbr/tensor_maps.hpp"

namespace {

using namespace adlbr;

Scheme parse_scheme(const std::string& s) {
  if (s == "adlbr") return Scheme::adlbr;
  if (s == "ann") return Scheme::ann;
  if (s == "fd") return Scheme::fd;
  throw std::invalid_argument("unknown scheme: " + s);
}

double wall_ms(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Cheap largest-eigenvalue estimate for step-size diagnostics.
template <int N>
double lambda_max_estimate(const SparseOperator<N>& a) {
  try {
    return eigen_max(a, 42, 1e-4, 2000);
  } catch (const std::runtime_error&) {
    return a.max_diagonal() * 2.0;  // Gershgorin-type fallback
  }
}

template <int N>
void print_stencil_report(const Stencil<N>& st, const SymMat<N>& d, int symbol_samples) {
  std::cout << "offset";
  for (int i = 0; i < N; ++i) std::cout << (i ? "," : " (") << "xyz"[i];
  std::cout << ")    weight        operator_coeff\n";
  for (const auto& arm : st.arms) {
    std::ostringstream off;
    off << "(";
    for (int i = 0; i < N; ++i) off << (i ? "," : "") << arm.offset.c[i];
    off << ")";
    std::cout << std::left << std::setw(12) << off.str() << std::right << std::setw(12)
              << std::fixed << std::setprecision(6) << arm.weight << std::setw(16)
              << (-2.0 * arm.weight + 0.0) << "\n";
  }
  std::cout << "center coefficient   " << std::setprecision(6) << st.center_coefficient()
            << "\n";
  std::cout << "stencil radius       " << stencil_radius(st) << "\n";
  std::cout << std::scientific << "decomposition resid  " << decomposition_residual(st, d)
            << "\n"
            << std::fixed;
  std::cout << "symbol max           " << symbol_max(st, symbol_samples) << "\n";
}

template <int N>
void write_stencil_csv(const Stencil<N>& st, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "offset_x,offset_y" << (N == 3 ? ",offset_z" : "") << ",weight,operator_coefficient\n";
  os.precision(17);
  for (const auto& arm : st.arms) {
    for (int i = 0; i < N; ++i) os << arm.offset.c[i] << ",";
    os << arm.weight << "," << (arm.weight == 0 ? 0.0 : -2.0 * arm.weight) << "\n";
  }
}

struct DiffusionFlags {
  StructureParams params;
  double dt = 0.02;
  double total_time = 10.0;
  int resume_every = 1;
  std::uint64_t seed = 42;
};

// Explicit nonlinear diffusion: rebuild the solution-dependent tensor and
// operator every `resume_every` steps, step explicitly in between.
template <int N, typename TensorMap>
ScalarField<N> nonlinear_diffusion(ScalarField<N> u, const DiffusionFlags& f,
                                   TensorMap&& tensor_map, bool log_lambda) {
  if (!(f.dt > 0)) throw std::invalid_argument("dt <= 0");
  if (f.resume_every < 1) throw std::invalid_argument("resume-every < 1");
  const long steps = std::lround(f.total_time / f.dt);
  double u_inf0 = 0;
  for (double v : u.values) u_inf0 = std::max(u_inf0, std::abs(v));

  SparseOperator<N> a;
  for (long step = 0; step < steps; ++step) {
    if (step % f.resume_every == 0) {
      const TensorField<N> d = tensor_map(u);
      a = assemble(d, Scheme::adlbr);
      if (step == 0) {
        if (log_lambda) {
          const double lm = lambda_max_estimate(a);
          std::cout << "lambda_max(t=0) ~ " << lm << "\n";
          if (f.dt * lm > 2.0)
            std::cout << "warning: dt * lambda_max = " << f.dt * lm
                      << " > 2, explicit stepping may be unstable\n";
        } else if (f.dt * a.max_diagonal() > 1.0) {
          std::cout << "warning: dt * max_diagonal = " << f.dt * a.max_diagonal()
                    << " > 1, the discrete maximum principle is not guaranteed\n";
        }
      }
    }
    u = explicit_step(u, a, f.dt);
    double u_inf = 0;
    for (double v : u.values) u_inf = std::max(u_inf, std::abs(v));
    if (u_inf > 10.0 * std::max(u_inf0, 1e-12))
      throw std::runtime_error("instability detected at step " + std::to_string(step + 1) +
                               " (|u|_inf grew 10x); reduce dt");
  }
  return u;
}

// ---------------------------------------------------------------------------

struct StencilCmd {
  double d11 = 1, d12 = 0, d22 = 1, d13 = 0, d23 = 0, d33 = 0;
  bool have_d33 = false;
  std::string scheme = "adlbr";
  std::string csv;
  int samples = 0;

  void run() const {
    if (have_d33) {
      if (scheme != "adlbr") throw std::invalid_argument("3D stencils: scheme must be adlbr");
      SymMat3 d;
      d(0, 0) = d11; d(0, 1) = d12; d(0, 2) = d13;
      d(1, 1) = d22; d(1, 2) = d23; d(2, 2) = d33;
      const Stencil3 st = adlbr_stencil_3d(d);
      print_stencil_report(st, d, samples);
      if (!csv.empty()) write_stencil_csv(st, csv);
    } else {
      SymMat2 d;
      d(0, 0) = d11; d(0, 1) = d12; d(1, 1) = d22;
      const Stencil2 st =
          parse_scheme(scheme) == Scheme::ann ? ann_stencil_2d(d) : adlbr_stencil_2d(d);
      print_stencil_report(st, d, samples);
      if (!csv.empty()) write_stencil_csv(st, csv);
    }
  }
};

struct EigenCmd {
  double d11 = 1, d12 = 0, d22 = 1;
  bool have_tensor = false;
  std::string from_image;
  StructureParams params;
  std::string scheme = "adlbr";
  std::string mode = "max";
  int k = 7;
  std::vector<int> ns = {64};
  std::string out_csv;
  std::string export_mm;

  // Largest eigenvalue of the operator for the image's own diffusion tensor.
  void run_from_image() const {
    const ScalarField2 u = read_pgm(from_image);
    const TensorField2 d = ced_tensor(structure_tensor(u, params), params);
    const SparseOperator<2> a = assemble(d, parse_scheme(scheme));
    if (mode == "smallest") {
      const auto ev = eigen_smallest(a, k);
      std::cout << "smallest:";
      for (double v : ev) std::cout << " " << v;
      std::cout << "\n";
    } else {
      std::cout << "eigen_max " << eigen_max(a) << "\n";
    }
  }

  void run() const {
    if (!from_image.empty()) {
      run_from_image();
      return;
    }
    if (!have_tensor)
      throw std::invalid_argument("pass --d11/--d12/--d22 or --from-image");
    SymMat2 d;
    d(0, 0) = d11; d(0, 1) = d12; d(1, 1) = d22;
    require_spd(d);
    const Scheme sch = parse_scheme(scheme);

    std::ofstream csv;
    if (!out_csv.empty()) {
      csv.open(out_csv);
      if (!csv) throw std::runtime_error("cannot open " + out_csv);
      csv << (mode == "max" ? "n,eigen_max\n" : "n,index,eigenvalue\n");
      csv.precision(12);
    }
    if (sch != Scheme::fd) {
      const Stencil2 st = sch == Scheme::adlbr ? adlbr_stencil_2d(d) : ann_stencil_2d(d);
      std::cout << "symbol sup (fine-grid limit): " << symbol_max(st) << "\n";
    }
    for (int n : ns) {
      const Grid<2> g({n, n}, 1.0, Boundary::periodic);
      const SparseOperator<2> a = assemble(TensorField2(g, d), sch);
      if (!export_mm.empty()) {
        std::ofstream mm(export_mm);
        if (!mm) throw std::runtime_error("cannot open " + export_mm);
        write_matrix_market(a, mm);
      }
      if (mode == "max") {
        const double lm = eigen_max(a);
        std::cout << "n=" << n << " eigen_max " << lm << "\n";
        if (csv.is_open()) csv << n << "," << lm << "\n";
      } else if (mode == "smallest") {
        const auto ev = eigen_smallest(a, k);
        std::cout << "n=" << n << " smallest:";
        for (double v : ev) std::cout << " " << v;
        std::cout << "\n";
        if (csv.is_open())
          for (int i = 0; i < k; ++i) csv << n << "," << i << "," << ev[i] << "\n";
      } else {
        throw std::invalid_argument("mode must be max or smallest");
      }
    }
  }
};

struct BenchCmd {
  std::vector<double> kappas;
  std::vector<int> ns;
  std::vector<std::string> schemes = {"adlbr", "ann", "fd"};
  std::string out_csv;

  void run() const {
    auto kk = kappas;
    auto nn = ns;
    auto ss = schemes;
    std::sort(kk.begin(), kk.end());
    kk.erase(std::unique(kk.begin(), kk.end()), kk.end());
    std::sort(nn.begin(), nn.end());
    nn.erase(std::unique(nn.begin(), nn.end()), nn.end());
    ss.erase(std::unique(ss.begin(), ss.end()), ss.end());

    std::ofstream csv;
    if (!out_csv.empty()) {
      const bool fresh = !std::ifstream(out_csv).good();
      csv.open(out_csv, std::ios::app);
      if (!csv) throw std::runtime_error("cannot open " + out_csv);
      if (fresh) csv << "scheme,kappa,n,l2_rel,h1_rel,wall_ms\n";
      csv.precision(12);
    }
    std::cout << "scheme   kappa      n      l2_rel        h1_rel        wall_ms\n";
    for (const std::string& sname : ss) {
      const Scheme sch = parse_scheme(sname);
      for (double kappa : kk) {
        for (int n : nn) {
          SyntheticCase c;
          c.kappa = kappa;
          c.n = n;
          const auto t0 = std::chrono::steady_clock::now();
          const ErrorNorms e = run_benchmark(c, sch);
          const double ms = wall_ms(t0);
          std::printf("%-8s %6.2f %6d   %.5e   %.5e   %9.1f\n", sname.c_str(), kappa, n,
                      e.l2_rel, e.h1_rel, ms);
          if (csv.is_open())
            csv << sname << "," << kappa << "," << n << "," << e.l2_rel << "," << e.h1_rel
                << "," << ms << "\n";
        }
      }
    }
  }
};

struct CedCmd {
  std::string input, output;
  DiffusionFlags flags;
  bool periodic = false;
  double intensity_scale = 1.0;

  void run() const {
    ScalarField2 u = read_pgm(input);
    if (periodic) u.grid.bc = Boundary::periodic;
    for (double& v : u.values) v *= intensity_scale;
    const StructureParams p = flags.params;
    u = nonlinear_diffusion<2>(
        std::move(u), flags,
        [&](const ScalarField2& cur) { return ced_tensor(structure_tensor(cur, p), p); },
        /*log_lambda=*/true);
    write_pgm(u, output, 0.0, intensity_scale);
  }
};

struct RestoreCmd {
  std::string input, output;
  double lambda = 1e-3;
  double tol = 1e-8;
  bool jacobi = false;
  std::string scheme = "adlbr";
  std::string tensor_file;
  StructureParams params;

  void run() const {
    const ScalarField2 v = read_pgm(input);
    TensorField2 d;
    if (!tensor_file.empty()) {
      d = read_tensor_volume<2>(tensor_file);
      if (d.grid.extents != v.grid.extents)
        throw std::invalid_argument("tensor volume extents do not match image");
      d.grid = v.grid;
    } else {
      d = ced_tensor(structure_tensor(v, params), params);
    }
    const SparseOperator<2> a = assemble(d, parse_scheme(scheme));
    const ScalarField2 u = lambda == 0 ? v : cg_solve(a, lambda, v, tol, jacobi);
    write_pgm(u, output, 0.0, 1.0);
  }
};

struct Volume3Cmd {
  bool eed = false;
  std::vector<std::string> files;  // [input,] output
  int phantom_n = 0;
  double noise_sd = 0.5;
  DiffusionFlags flags{.params = {}, .dt = 1e-3, .total_time = 0.02};

  void run() const {
    ScalarField3 u;
    std::string output;
    if (phantom_n > 0) {
      if (files.size() != 1)
        throw std::invalid_argument("with --phantom, pass exactly one path (the output)");
      output = files[0];
      u = radial_phantom(phantom_n, noise_sd, flags.seed);
    } else {
      if (files.size() != 2)
        throw std::invalid_argument("need input and output volumes (or --phantom n)");
      output = files[1];
      u = read_scalar_volume<3>(files[0]);
    }
    const StructureParams p = flags.params;
    const bool use_eed = eed;
    u = nonlinear_diffusion<3>(
        std::move(u), flags,
        [&](const ScalarField3& cur) {
          const TensorField3 j = structure_tensor(cur, p);
          return use_eed ? eed_tensor(j, p) : ced_tensor(j, p);
        },
        /*log_lambda=*/false);
    write_volume(u, output);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic diffusion on Cartesian grids via lattice basis reduction"};
  app.require_subcommand(1);

  StencilCmd stencil_cmd;
  auto* sc = app.add_subcommand("stencil", "Print the stencil of a constant tensor");
  sc->add_option("--d11", stencil_cmd.d11)->required();
  sc->add_option("--d12", stencil_cmd.d12)->required();
  sc->add_option("--d22", stencil_cmd.d22)->required();
  sc->add_option("--d13", stencil_cmd.d13);
  sc->add_option("--d23", stencil_cmd.d23);
  auto* o33 = sc->add_option("--d33", stencil_cmd.d33, "3x3 tensor if given");
  sc->add_option("--scheme", stencil_cmd.scheme, "adlbr|ann")
      ->check(CLI::IsMember({"adlbr", "ann"}));
  sc->add_option("--csv", stencil_cmd.csv, "write machine-readable CSV here");
  sc->add_option("--symbol-samples", stencil_cmd.samples, "symbol grid samples per axis");
  sc->callback([&] {
    stencil_cmd.have_d33 = o33->count() > 0;
    stencil_cmd.run();
  });

  EigenCmd eigen_cmd;
  auto* ec = app.add_subcommand("eigen", "Spectrum of the assembled diffusion operator");
  auto* od11 = ec->add_option("--d11", eigen_cmd.d11);
  ec->add_option("--d12", eigen_cmd.d12);
  ec->add_option("--d22", eigen_cmd.d22);
  ec->add_option("--from-image", eigen_cmd.from_image,
                 "build the tensor field from this PGM image instead");
  ec->add_option("--sigma", eigen_cmd.params.sigma);
  ec->add_option("--rho", eigen_cmd.params.rho);
  ec->add_option("--contrast", eigen_cmd.params.contrast);
  ec->add_option("--alpha", eigen_cmd.params.alpha);
  ec->add_option("--scheme", eigen_cmd.scheme)->check(CLI::IsMember({"adlbr", "ann", "fd"}));
  ec->add_option("--mode", eigen_cmd.mode, "max|smallest")
      ->check(CLI::IsMember({"max", "smallest"}));
  ec->add_option("--k", eigen_cmd.k, "how many smallest eigenvalues")->check(CLI::PositiveNumber);
  ec->add_option("--n", eigen_cmd.ns, "grid sizes (sweep allowed)");
  ec->add_option("--out", eigen_cmd.out_csv, "CSV output");
  ec->add_option("--export-mm", eigen_cmd.export_mm, "MatrixMarket export of the operator");
  ec->callback([&] {
    eigen_cmd.have_tensor = od11->count() > 0;
    eigen_cmd.run();
  });

  BenchCmd bench_cmd;
  auto* bc = app.add_subcommand("bench", "Analytic restoration benchmark");
  bc->add_option("--kappa", bench_cmd.kappas, "anisotropy ratios")->required()->expected(-1);
  bc->add_option("--n", bench_cmd.ns, "grid resolutions")->required()->expected(-1);
  bc->add_option("--scheme", bench_cmd.schemes, "schemes to run")->expected(-1);
  bc->add_option("--out", bench_cmd.out_csv, "append CSV rows here");
  bc->callback([&] { bench_cmd.run(); });

  CedCmd ced_cmd;
  auto* cc = app.add_subcommand("ced", "Coherence-enhancing diffusion of a PGM image");
  cc->add_option("input", ced_cmd.input, "input .pgm")->required();
  cc->add_option("output", ced_cmd.output, "output .pgm")->required();
  cc->add_option("--sigma", ced_cmd.flags.params.sigma);
  cc->add_option("--rho", ced_cmd.flags.params.rho);
  cc->add_option("--contrast", ced_cmd.flags.params.contrast);
  cc->add_option("--alpha", ced_cmd.flags.params.alpha);
  cc->add_option("--dt", ced_cmd.flags.dt);
  cc->add_option("--T", ced_cmd.flags.total_time);
  cc->add_option("--resume-every", ced_cmd.flags.resume_every,
                 "rebuild the operator every k steps");
  cc->add_option("--seed", ced_cmd.flags.seed);
  cc->add_flag("--periodic", ced_cmd.periodic, "periodic instead of reflected boundary");
  cc->add_option("--intensity-scale", ced_cmd.intensity_scale,
                 "rescale [0,1] samples before processing");
  cc->callback([&] { ced_cmd.run(); });

  RestoreCmd restore_cmd;
  auto* rc = app.add_subcommand("restore", "Penalized least-squares restoration of a PGM image");
  rc->add_option("input", restore_cmd.input)->required();
  rc->add_option("output", restore_cmd.output)->required();
  rc->add_option("--lambda", restore_cmd.lambda);
  rc->add_option("--tol", restore_cmd.tol);
  rc->add_flag("--jacobi", restore_cmd.jacobi, "Jacobi-preconditioned CG");
  rc->add_option("--scheme", restore_cmd.scheme)->check(CLI::IsMember({"adlbr", "ann", "fd"}));
  rc->add_option("--tensor", restore_cmd.tensor_file, "sym2 tensor volume (default: CED map)");
  rc->add_option("--sigma", restore_cmd.params.sigma);
  rc->add_option("--rho", restore_cmd.params.rho);
  rc->add_option("--contrast", restore_cmd.params.contrast);
  rc->add_option("--alpha", restore_cmd.params.alpha);
  rc->callback([&] { restore_cmd.run(); });

  Volume3Cmd ced3d_cmd, eed3d_cmd;
  eed3d_cmd.eed = true;
  auto add_volume_cmd = [&](const char* name, Volume3Cmd* cmd, const char* desc) {
    auto* vc = app.add_subcommand(name, desc);
    vc->add_option("files", cmd->files, "input.vol output.vol (output only with --phantom)")
        ->expected(1, 2);
    vc->add_option("--phantom", cmd->phantom_n, "generate the radial phantom at n^3");
    vc->add_option("--noise-sd", cmd->noise_sd, "phantom noise standard deviation");
    vc->add_option("--sigma", cmd->flags.params.sigma);
    vc->add_option("--rho", cmd->flags.params.rho);
    vc->add_option("--contrast", cmd->flags.params.contrast);
    vc->add_option("--alpha", cmd->flags.params.alpha);
    vc->add_option("--dt", cmd->flags.dt);
    vc->add_option("--T", cmd->flags.total_time);
    vc->add_option("--resume-every", cmd->flags.resume_every);
    vc->add_option("--seed", cmd->flags.seed);
    vc->callback([cmd] { cmd->run(); });
  };
  add_volume_cmd("ced3d", &ced3d_cmd, "Coherence-enhancing diffusion of a volume");
  add_volume_cmd("eed3d", &eed3d_cmd, "Edge-enhancing diffusion of a volume");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
