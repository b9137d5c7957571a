// Command-line pipeline over binary shape masks: spectra, spectral
// distances, affinity matrices, ISOMAP embeddings, retrieval scores and
// residual-ratio tables. Spectra are the cached intermediate; everything
// downstream is cheap to recompute.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wesd/wesd.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  double p = 0.0;  // 0 = pick the dimension default
  int modes = wesd::kDefaultModes;
  double tol = wesd::kDefaultTol;
  std::string normalize = "none";
  std::string metric = "wesd";
  int neighbors = 6;
  int dim = 2;
  int workers = 1;
  std::uint64_t seed = wesd::kDefaultSeed;
  int threshold = 127;
};

wesd::DistanceParams make_params(const CommonFlags& flags, int dim) {
  wesd::DistanceParams params;
  params.p = flags.p > 0.0 ? flags.p : wesd::default_norm_exponent(dim);
  params.modes = flags.modes;
  params.metric = wesd::metric_from_name(flags.metric);
  return params;
}

wesd::Normalisation parse_normalisation(const std::string& s) {
  if (s == "none") return wesd::Normalisation::Raw;
  if (s == "volume") return wesd::Normalisation::Volume;
  if (s == "first") return wesd::Normalisation::FirstEigenvalue;
  wesd::fail(wesd::ErrorCode::InvalidArgument,
             "--normalize must be one of none, volume, first");
}

int run_spectrum(const std::string& input, const std::string& output,
                 const CommonFlags& flags) {
  auto dom = wesd::load_domain(fs::path(input), wesd::MaskFormat::Auto,
                               flags.threshold);
  auto op = wesd::assemble(dom);
  const int modes = std::min<int>(flags.modes, static_cast<int>(op.order()));
  auto spec = wesd::smallest_eigenvalues(op, modes, flags.tol, flags.seed);
  const auto tag = parse_normalisation(flags.normalize);
  if (tag != wesd::Normalisation::Raw) spec = wesd::normalize(spec, tag);
  wesd::save_spectrum(spec, fs::path(output));
  return 0;
}

int run_distance(const std::string& file_a, const std::string& file_b,
                 const CommonFlags& flags) {
  auto a = wesd::load_spectrum(fs::path(file_a));
  auto b = wesd::load_spectrum(fs::path(file_b));
  auto report = wesd::distance(a, b, make_params(flags, a.dim()));
  wesd::save_report(report, std::cout);
  return 0;
}

std::vector<fs::path> spectrum_files(const std::string& dir) {
  wesd::require(fs::is_directory(dir), wesd::ErrorCode::IoError,
                "'" + dir + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".spec")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  wesd::require(!files.empty(), wesd::ErrorCode::IoError,
                "no .spec files under '" + dir + "'");
  return files;
}

int run_matrix(const std::string& dir, const std::string& output,
               const CommonFlags& flags) {
  std::vector<std::string> ids;
  std::vector<wesd::Spectrum> spectra;
  for (const auto& path : spectrum_files(dir)) {
    ids.push_back(path.stem().string());
    spectra.push_back(wesd::load_spectrum(path));
  }
  auto params = make_params(flags, spectra.front().dim());
  auto matrix = wesd::pairwise_matrix(ids, spectra, params, flags.workers);
  wesd::save_affinity_csv(matrix, fs::path(output));
  return 0;
}

int run_embed(const std::string& input, const std::string& output,
              const CommonFlags& flags) {
  auto matrix = wesd::load_affinity_csv(fs::path(input));
  auto emb = wesd::isomap(matrix, flags.neighbors, flags.dim);
  if (!emb.warning.empty()) std::cerr << "warning: " << emb.warning << "\n";
  wesd::save_embedding_csv(emb, fs::path(output));
  return 0;
}

int run_retrieve(const std::string& matrix_file, const std::string& labels_file) {
  auto matrix = wesd::load_affinity_csv(fs::path(matrix_file));
  auto labels = wesd::load_labels_csv(fs::path(labels_file), matrix.ids());
  auto scores = wesd::evaluate(wesd::LabeledDataset(matrix, labels));
  wesd::save_scores(scores, std::cout);
  return 0;
}

int run_residual(const CommonFlags& flags, int dim, double target,
                 bool have_target) {
  const double p = flags.p > 0.0 ? flags.p : wesd::default_norm_exponent(dim);
  char buf[64];
  if (have_target) {
    const int n = wesd::select_truncation(p, dim, target);
    std::snprintf(buf, sizeof(buf), "%.17g", wesd::residual_ratio(n, p, dim));
    std::cout << "N " << n << "\nR " << buf << "\n";
    return 0;
  }
  std::cout << "N,R\n";
  for (int n = 3; n <= flags.modes; ++n) {
    std::snprintf(buf, sizeof(buf), "%.17g", wesd::residual_ratio(n, p, dim));
    std::cout << n << ',' << buf << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Laplace spectra and weighted spectral distances for binary shapes"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string input, input_b, output;
  int residual_dim = 2;
  double target = 0.0;
  bool have_target = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--p", flags.p, "norm exponent (default 1.5 in 2D, 2 in 3D)");
    cmd->add_option("--modes", flags.modes, "number of modes N");
    cmd->add_option("--tol", flags.tol, "solver relative residual tolerance");
    cmd->add_option("--normalize", flags.normalize,
                    "spectrum normalisation: none|volume|first");
    cmd->add_option("--metric", flags.metric, "distance: wesd|nwesd|shapedna");
    cmd->add_option("--neighbors", flags.neighbors, "ISOMAP neighbourhood size");
    cmd->add_option("--dim", flags.dim, "embedding target dimension");
    cmd->add_option("--workers", flags.workers, "worker threads");
    cmd->add_option("--seed", flags.seed, "solver start-vector seed");
    cmd->add_option("--threshold", flags.threshold,
                    "grayscale foreground threshold");
  };

  auto* spectrum = app.add_subcommand("spectrum", "compute a spectrum cache file");
  spectrum->add_option("input", input, "mask file (pgm/pbm/bvox)")->required();
  spectrum->add_option("-o,--output", output, "spectrum file")->required();
  add_common(spectrum);

  auto* dist = app.add_subcommand("distance", "distance report for two spectra");
  dist->add_option("a", input, "first spectrum file")->required();
  dist->add_option("b", input_b, "second spectrum file")->required();
  add_common(dist);

  auto* matrix = app.add_subcommand("matrix", "pairwise affinity matrix");
  matrix->add_option("dir", input, "directory of .spec files")->required();
  matrix->add_option("-o,--output", output, "affinity CSV")->required();
  add_common(matrix);

  auto* embed = app.add_subcommand("embed", "ISOMAP embedding of an affinity CSV");
  embed->add_option("matrix", input, "affinity CSV")->required();
  embed->add_option("-o,--output", output, "embedding CSV")->required();
  add_common(embed);

  auto* retrieve = app.add_subcommand("retrieve", "retrieval scores");
  retrieve->add_option("matrix", input, "affinity CSV")->required();
  retrieve->add_option("labels", input_b, "labels CSV (id,class)")->required();
  add_common(retrieve);

  auto* residual = app.add_subcommand("residual",
                                      "residual ratio table or mode selection");
  residual->add_option("--d", residual_dim, "spatial dimension (2 or 3)");
  auto* target_opt =
      residual->add_option("--target", target, "pick smallest N with R <= target");
  add_common(residual);

  CLI11_PARSE(app, argc, argv);
  have_target = target_opt->count() > 0;

  try {
    if (spectrum->parsed()) return run_spectrum(input, output, flags);
    if (dist->parsed()) return run_distance(input, input_b, flags);
    if (matrix->parsed()) return run_matrix(input, output, flags);
    if (embed->parsed()) return run_embed(input, output, flags);
    if (retrieve->parsed()) return run_retrieve(input, input_b);
    if (residual->parsed())
      return run_residual(flags, residual_dim, target, have_target);
  } catch (const wesd::Error& e) {
    std::cerr << "error: " << e.name() << ": " << e.what() << "\n";
    return e.code() == wesd::ErrorCode::NonConvergence ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: InternalError: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
