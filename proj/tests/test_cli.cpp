// Integration tests that drive the wesd binary end to end. Takes the binary
// path as argv[1]; creates its own scratch directory.

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "wesd/wesd.hpp"

#include "support/masks.hpp"

namespace fs = std::filesystem;

namespace {

int checks = 0;
int failures = 0;

void expect(bool ok, const std::string& what) {
  ++checks;
  if (!ok) {
    ++failures;
    std::cerr << "FAILED: " << what << "\n";
  }
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run(const std::string& binary, const std::string& args,
              const fs::path& dir) {
  const fs::path out_file = dir / "stdout.txt";
  const fs::path err_file = dir / "stderr.txt";
  const std::string cmd = binary + " " + args + " > " + out_file.string() +
                          " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: test_cli <wesd-binary>\n";
    return 2;
  }
  const std::string binary = argv[1];
  const fs::path dir =
      fs::temp_directory_path() / ("wesd_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  fs::create_directories(dir / "specs");

  // --- fixtures -----------------------------------------------------------
  auto disc = testsupport::disc(28, 10.0, 1.0, "disc");
  testsupport::write_pgm(disc, (dir / "disc.pgm").string());
  auto rect = testsupport::rectangle_mask(28, 12.0, 6.0, 1.0, "rect");
  testsupport::write_pgm(rect, (dir / "rect.pgm").string());
  auto blob = testsupport::blob(28, 9.0, 0.2, 3u, "blob");
  testsupport::write_pgm(blob, (dir / "blob.pgm").string());
  auto box = testsupport::filled_box(6, 6, 6, 0.5, "box");
  testsupport::write_bvox(box, (dir / "box.bvox").string());

  // --- spectrum -----------------------------------------------------------
  {
    auto r = run(binary,
                 "spectrum " + (dir / "disc.pgm").string() + " -o " +
                     (dir / "specs" / "disc.spec").string() +
                     " --modes 24 --normalize volume",
                 dir);
    expect(r.exit_code == 0, "spectrum exits 0: " + r.err);
    auto spec = wesd::load_spectrum(dir / "specs" / "disc.spec");
    expect(spec.size() == 24, "spectrum has 24 modes");
    expect(spec.tag() == wesd::Normalisation::Volume, "volume tag");
    bool ascending = true;
    for (std::size_t i = 1; i < spec.size(); ++i)
      if (spec[i] < spec[i - 1]) ascending = false;
    expect(ascending, "eigenvalues ascend");
  }
  {
    // determinism: byte-identical reruns
    auto first = run(binary,
                     "spectrum " + (dir / "disc.pgm").string() + " -o " +
                         (dir / "copy1.spec").string() + " --modes 12",
                     dir);
    auto second = run(binary,
                      "spectrum " + (dir / "disc.pgm").string() + " -o " +
                          (dir / "copy2.spec").string() + " --modes 12",
                      dir);
    expect(first.exit_code == 0 && second.exit_code == 0, "reruns exit 0");
    expect(slurp(dir / "copy1.spec") == slurp(dir / "copy2.spec"),
           "byte-identical spectra");
  }
  {
    std::ofstream bad(dir / "corrupt.pgm");
    bad << "P2\n4 nonsense\n";
    bad.close();
    auto r = run(binary,
                 "spectrum " + (dir / "corrupt.pgm").string() + " -o " +
                     (dir / "corrupt.spec").string(),
                 dir);
    expect(r.exit_code == 2, "corrupt input exits 2");
    expect(r.err.find("ParseError") != std::string::npos,
           "ParseError named on stderr");
  }
  {
    auto r = run(binary,
                 "spectrum " + (dir / "box.bvox").string() + " -o " +
                     (dir / "box.spec").string() + " --modes 5",
                 dir);
    expect(r.exit_code == 0, "3d bvox spectrum exits 0: " + r.err);
    auto spec = wesd::load_spectrum(dir / "box.spec");
    expect(spec.dim() == 3, "bvox spectra are 3d");
  }
  {
    // unreachable tolerance: solver gives up with exit code 1
    auto r = run(binary,
                 "spectrum " + (dir / "disc.pgm").string() + " -o " +
                     (dir / "never.spec").string() + " --modes 2 --tol 1e-30",
                 dir);
    expect(r.exit_code == 1, "non-convergence exits 1");
    expect(r.err.find("NonConvergence") != std::string::npos,
           "NonConvergence named on stderr");
  }

  // remaining spectra for the matrix test
  for (const char* name : {"rect", "blob"}) {
    auto r = run(binary,
                 "spectrum " + (dir / (std::string(name) + ".pgm")).string() +
                     " -o " + (dir / "specs" / (std::string(name) + ".spec")).string() +
                     " --modes 24 --normalize volume",
                 dir);
    expect(r.exit_code == 0, std::string("spectrum for ") + name);
  }

  // --- distance -----------------------------------------------------------
  {
    const std::string spec = (dir / "specs" / "disc.spec").string();
    auto r = run(binary, "distance " + spec + " " + spec + " --metric wesd", dir);
    expect(r.exit_code == 0, "self distance exits 0");
    expect(r.out.find("value 0\n") != std::string::npos, "self distance is 0");
  }
  {
    auto r = run(binary,
                 "distance " + (dir / "specs" / "disc.spec").string() + " " +
                     (dir / "specs" / "rect.spec").string() +
                     " --metric nwesd --modes 24",
                 dir);
    expect(r.exit_code == 0, "nwesd distance exits 0: " + r.err);
    for (const char* key : {"W ", "C ", "K ", "residual_ratio "})
      expect(r.out.find(key) != std::string::npos,
             std::string("nwesd report carries ") + key);
    std::istringstream in(r.out);
    std::string line;
    double value = -1.0;
    while (std::getline(in, line))
      if (line.rfind("value ", 0) == 0) value = std::stod(line.substr(6));
    expect(value >= 0.0 && value < 1.0, "nwesd value in [0,1)");
  }
  {
    // mismatched normalisation tags
    auto r = run(binary,
                 "distance " + (dir / "specs" / "disc.spec").string() + " " +
                     (dir / "copy1.spec").string(),
                 dir);
    expect(r.exit_code == 2, "normalisation mismatch exits 2");
    expect(r.err.find("NormalisationMismatch") != std::string::npos,
           "NormalisationMismatch named on stderr");
  }

  // --- matrix -------------------------------------------------------------
  {
    auto r = run(binary,
                 "matrix " + (dir / "specs").string() + " -o " +
                     (dir / "aff.csv").string() + " --modes 24",
                 dir);
    expect(r.exit_code == 0, "matrix exits 0: " + r.err);
    auto m = wesd::load_affinity_csv(dir / "aff.csv");
    expect(m.size() == 3, "3x3 affinity");
    bool diag_zero = true;
    for (std::size_t i = 0; i < 3; ++i)
      if (m.at(i, i) != 0.0) diag_zero = false;
    expect(diag_zero, "zero diagonal");

    auto r8 = run(binary,
                  "matrix " + (dir / "specs").string() + " -o " +
                      (dir / "aff8.csv").string() + " --modes 24 --workers 8",
                  dir);
    expect(r8.exit_code == 0, "matrix with 8 workers exits 0");
    expect(slurp(dir / "aff.csv") == slurp(dir / "aff8.csv"),
           "identical CSV independent of workers");
  }
  {
    fs::create_directories(dir / "empty");
    auto r = run(binary,
                 "matrix " + (dir / "empty").string() + " -o " +
                     (dir / "nothing.csv").string(),
                 dir);
    expect(r.exit_code == 2, "empty directory exits 2");
  }

  // --- embed --------------------------------------------------------------
  {
    // exact 3-point Euclidean matrix
    std::ofstream aff(dir / "tri.csv");
    aff << "id,a,b,c\n";
    aff << "a,0,1,1\n";
    aff << "b,1,0,1.4142135623730951\n";
    aff << "c,1,1.4142135623730951,0\n";
    aff.close();
    auto r = run(binary,
                 "embed " + (dir / "tri.csv").string() + " -o " +
                     (dir / "tri_emb.csv").string() + " --neighbors 2 --dim 2",
                 dir);
    expect(r.exit_code == 0, "embed exits 0: " + r.err);
    std::ifstream emb(dir / "tri_emb.csv");
    std::string header;
    std::getline(emb, header);
    expect(header == "id,c1,c2", "embedding header");
    // check pairwise distances reproduce the input
    std::vector<std::array<double, 2>> pts;
    std::string line;
    while (std::getline(emb, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string id, c1, c2;
      std::getline(ls, id, ',');
      std::getline(ls, c1, ',');
      std::getline(ls, c2, ',');
      pts.push_back({std::stod(c1), std::stod(c2)});
    }
    expect(pts.size() == 3, "three embedded points");
    auto dist = [&](int i, int j) {
      const double dx = pts[i][0] - pts[j][0];
      const double dy = pts[i][1] - pts[j][1];
      return std::sqrt(dx * dx + dy * dy);
    };
    expect(std::abs(dist(0, 1) - 1.0) < 1e-8, "embed d(a,b)");
    expect(std::abs(dist(0, 2) - 1.0) < 1e-8, "embed d(a,c)");
    expect(std::abs(dist(1, 2) - 1.4142135623730951) < 1e-8, "embed d(b,c)");
  }

  // --- retrieve -----------------------------------------------------------
  {
    std::ofstream aff(dir / "toy.csv");
    aff << "id,a1,a2,b1,b2\n";
    aff << "a1,0,1,10,10\n";
    aff << "a2,1,0,10,10\n";
    aff << "b1,10,10,0,1\n";
    aff << "b2,10,10,1,0\n";
    aff.close();
    std::ofstream labels(dir / "toy_labels.csv");
    labels << "id,class\na1,A\na2,A\nb1,B\nb2,B\n";
    labels.close();
    auto r = run(binary,
                 "retrieve " + (dir / "toy.csv").string() + " " +
                     (dir / "toy_labels.csv").string(),
                 dir);
    expect(r.exit_code == 0, "retrieve exits 0: " + r.err);
    for (const char* key : {"NN 1\n", "FT 1\n", "ST 1\n", "DCG 1\n"})
      expect(r.out.find(key) != std::string::npos,
             std::string("toy retrieval scores 1.0: ") + key);
  }

  // --- residual -----------------------------------------------------------
  {
    auto r = run(binary, "residual --d 2 --p 1.5 --target 0.05", dir);
    expect(r.exit_code == 0, "residual target exits 0");
    expect(r.out.find("N 460") != std::string::npos,
           "selected N matches the summation oracle (460)");
  }
  {
    auto r = run(binary, "residual --d 2 --p 2 --modes 10", dir);
    expect(r.exit_code == 0, "residual table exits 0");
    expect(r.out.find("N,R") != std::string::npos, "table header");
  }

  std::cout << checks - failures << "/" << checks << " cli checks passed\n";
  fs::remove_all(dir);
  return failures == 0 ? 0 : 1;
}
