// Times the OpenMP kernels against their serial references and checks that
// both produce identical output.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

#include "resicomp/corpus.hpp"
#include "resicomp/density.hpp"
#include "resicomp/pipeline.hpp"

using namespace resicomp;

namespace {

double best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-14s serial %8.2f ms  parallel %8.2f ms  speedup %5.2fx  %s\n", name, serial * 1e3, parallel * 1e3,
              serial / parallel, same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int size = argc > 1 ? std::atoi(argv[1]) : 512;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 5;
  std::printf("threads %d, image %dx%d, best of %d\n", omp_get_max_threads(), size, size, reps);

  const CodecConfig codec;
  const Image img = synthetic_image(0, size, size);
  bool ok = true;

  TokenGrid a, b;
  const double ts = best_of(reps, [&] { a = analyze_serial(img, codec); });
  const double tp = best_of(reps, [&] { b = analyze(img, codec); });
  report("analyze", ts, tp, a == b);
  ok = ok && a == b;

  const PriorModel prior = default_prior(codec);
  TokenGrid masked = a;
  std::vector<Position> holes;
  std::mt19937_64 rng(1);
  for (int r = 0; r < a.h; ++r)
    for (int c = 0; c < a.w; ++c)
      if (rng() % 2) {
        masked.known[a.index(r, c)] = 0;
        holes.push_back({r, c});
      }
  PredictorOutput ps, pp;
  const double ps_t = best_of(reps, [&] { ps = predict_at_serial(masked, prior, holes); });
  const double pp_t = best_of(reps, [&] { pp = predict_at(masked, prior, holes); });
  bool same = ps.values == pp.values && ps.gmm.size() == pp.gmm.size();
  for (size_t i = 0; same && i < ps.gmm.size(); ++i)
    same = ps.gmm[i].weights == pp.gmm[i].weights && ps.gmm[i].means == pp.gmm[i].means &&
           ps.gmm[i].sigmas == pp.gmm[i].sigmas;
  report("predict_at", ps_t, pp_t, same);
  ok = ok && same;

  std::vector<FreqTable> fs, fp;
  const double fs_t = best_of(reps, [&] { fs = build_tables_serial(ps.gmm, codec.clamp); });
  const double fp_t = best_of(reps, [&] { fp = build_tables(ps.gmm, codec.clamp); });
  report("build_tables", fs_t, fp_t, fs == fp);
  ok = ok && fs == fp;
  return ok ? 0 : 1;
}
