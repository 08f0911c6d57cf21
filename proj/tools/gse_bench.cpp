// Timing comparison of the serial reference path against the OpenMP path for
// the heavy kernels: frame estimation + graph assembly, the full fit, and
// batch out-of-sample embedding.  Both paths compute identical bits; this
// tool only reports wall-clock speedup.

#include "gse/manifolds.hpp"
#include "gse/model.hpp"
#include "gse/parallel.hpp"
#include "gse/stage1.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

namespace {

double time_once(const std::function<void()>& f) {
  auto t0 = std::chrono::steady_clock::now();
  f();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

double best_of(int reps, const std::function<void()>& f) {
  double best = time_once(f);
  for (int r = 1; r < reps; ++r) best = std::min(best, time_once(f));
  return best;
}

struct Case {
  std::string label;
  std::function<void()> body;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<gse::Index> sizes = {500, 1000, 2000};
  int reps = 3;
  if (argc > 1) {
    sizes.clear();
    for (int a = 1; a < argc; ++a) {
      gse::Index n = std::atol(argv[a]);
      if (n < 1) {
        std::fprintf(stderr, "usage: %s [n1 n2 ...]  (positive sample sizes)\n", argv[0]);
        return 1;
      }
      sizes.push_back(n);
    }
  }

  std::printf("threads available: %d\n", gse::par::max_threads());
  std::printf("%-28s %10s %12s %12s %9s\n", "kernel", "n", "serial s", "parallel s", "speedup");

  for (gse::Index n : sizes) {
    auto gen = gse::make_manifold("SwissRoll");
    gse::PointCloud train = gse::sample(*gen, n, 2);
    gse::PointCloud test = gse::sample(*gen, 200, 1002);
    gse::HyperParams params;
    params.q = 2;
    gse::HyperParams resolved = params.resolved(train.points);

    gse::par::set_enabled(true);
    gse::GseModel model = gse::GseModel::fit(train.points, params);

    // keep only queries the model covers: boundary draws can fall outside
    // the fitted chart at small n and would abort the timing loop
    std::vector<gse::Index> covered;
    for (gse::Index i = 0; i < test.n(); ++i) {
      try {
        model.embed(test.points.row(i).transpose());
        covered.push_back(i);
      } catch (const gse::Error&) {
      }
    }

    std::vector<Case> cases;
    cases.push_back({"frames + kernel graph", [&] {
                       gse::build_kernel_graph(train.points, resolved);
                     }});
    cases.push_back({"full fit", [&] { gse::GseModel::fit(train.points, params); }});
    cases.push_back({"batch embed (" + std::to_string(covered.size()) + " queries)", [&] {
                       for (gse::Index i : covered) {
                         model.embed(test.points.row(i).transpose());
                       }
                     }});

    for (const Case& c : cases) {
      gse::par::set_enabled(false);
      double serial = best_of(reps, c.body);
      gse::par::set_enabled(true);
      double parallel = best_of(reps, c.body);
      std::printf("%-28s %10lld %12.4f %12.4f %8.2fx\n", c.label.c_str(),
                  static_cast<long long>(n), serial, parallel, serial / parallel);
    }
  }
  return 0;
}
