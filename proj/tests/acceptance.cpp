// Acceptance checks; one PASS/FAIL line per criterion, exit status 1 if any
// fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "resicomp/corpus.hpp"
#include "resicomp/density.hpp"
#include "resicomp/entropy_coder.hpp"
#include "resicomp/experiment.hpp"
#include "resicomp/pipeline.hpp"
#include "resicomp/sweep.hpp"

using namespace resicomp;

namespace {

using Clock = std::chrono::steady_clock;

const CodecConfig kCodec;
constexpr int kH = 128;
constexpr int kW = 192;

const PriorModel& prior() {
  static const PriorModel p = default_prior(kCodec);
  return p;
}

const std::vector<Image>& corpus(int n) {
  static std::vector<Image> images;
  if (static_cast<int>(images.size()) < n) images = synthetic_corpus(n, kH, kW);
  return images;
}

ImageShape shape() { return {kH, kW, 1}; }

StreamConfig stream(ModeKind kind, int slices, int param, uint64_t image_id) {
  StreamConfig cfg;
  cfg.mode = kind;
  cfg.slices = slices;
  cfg.mode_param = param;
  cfg.plan_seed = 0x5eed;
  cfg.image_id = image_id;
  return cfg;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Verdict lossless_transport() {
  const auto& images = corpus(20);
  struct M {
    ModeKind kind;
    int param;
  };
  const std::vector<M> modes{{ModeKind::kIsc, 0}, {ModeKind::kLc, 0}, {ModeKind::kMdc, 2},
                             {ModeKind::kMdc, 4}, {ModeKind::kSlc, 1}};
  int cases = 0, exact = 0;
  const auto t0 = Clock::now();
  for (size_t i = 0; i < 20; ++i) {
    const TokenGrid tokens = analyze(images[i], kCodec);
    for (const M& m : modes)
      for (int L : {4, 10, 32}) {
        const StreamConfig cfg = stream(m.kind, L, m.param, i);
        const auto pk = send_tokens(tokens, cfg, prior());
        const ReceiveResult r = receive(pk, cfg, prior(), shape());
        ++cases;
        if (r.outcome == Outcome::kLossless && r.decoded == tokens) ++exact;
      }
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  return {exact == cases && secs < 60.0, fmt("%d/%d bit-exact in %.1f s (limit 60 s)", exact, cases, secs)};
}

Verdict coder_efficiency() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Pool of model tables; each slice symbol picks one and is drawn from its
  // model pmf.
  std::vector<Pmf> pmfs;
  std::vector<FreqTable> tables;
  std::vector<std::vector<double>> cdfs;
  for (int t = 0; t < 4000; ++t) {
    GmmParams g;
    double logits[3];
    for (double& l : logits) l = 4.0 * u(rng) - 2.0;
    const auto w = softmax(std::span<const double>(logits, 3));
    for (int k = 0; k < 3; ++k) {
      g.weights[k] = w[k];
      g.means[k] = (2.0 * u(rng) - 1.0) * 40.0;
      g.sigmas[k] = kSigmaFloor + std::pow(10.0, 2.5 * u(rng) - 1.0);
    }
    pmfs.push_back(discretize(g, kCodec.clamp));
    tables.push_back(to_freq_table(pmfs.back()));
    std::vector<double> c(pmfs.back().probs.size());
    std::partial_sum(pmfs.back().probs.begin(), pmfs.back().probs.end(), c.begin());
    cdfs.push_back(std::move(c));
  }
  int within = 0, roundtrip = 0;
  double worst_excess = -1e300, worst_excess_pmf = -1e300;
  const int n_slices = 10000;
  for (int s = 0; s < n_slices; ++s) {
    const int n = 1000 + static_cast<int>(rng() % 1001);
    std::vector<FreqTable> ts;
    std::vector<int> sym;
    ts.reserve(n);
    sym.reserve(n);
    double ideal = 0, ideal_pmf = 0;
    for (int i = 0; i < n; ++i) {
      const size_t pick = rng() % tables.size();
      const auto& c = cdfs[pick];
      const size_t idx = std::min<size_t>(
          static_cast<size_t>(std::upper_bound(c.begin(), c.end(), u(rng) * c.back()) - c.begin()), c.size() - 1);
      const int v = pmfs[pick].lo + static_cast<int>(idx);
      ts.push_back(tables[pick]);
      sym.push_back(v);
      ideal += bits_of(tables[pick], v);
      ideal_pmf += bits_of(pmfs[pick], v);
    }
    const Bitstring b = encode(sym, ts);
    const double got = static_cast<double>(b.bit_length());
    if (got <= ideal + 64.0 + 0.001 * ideal) ++within;
    if (decode(b, ts) == sym) ++roundtrip;
    worst_excess = std::max(worst_excess, got - ideal);
    worst_excess_pmf = std::max(worst_excess_pmf, got - ideal_pmf);
  }
  return {within == n_slices && roundtrip == n_slices,
          fmt("%d/%d slices within bound, %d round-trip; worst excess %.1f bits over the coded "
              "tables (%.1f over the unquantized pmfs)",
              within, n_slices, roundtrip, worst_excess, worst_excess_pmf)};
}

Verdict markov_presets() {
  struct Row {
    const char* name;
    double eps, gamma;
  };
  // Published per-preset loss rate and mean burst length.
  const std::vector<Row> table{{"EP1", 0.002, 6.50}, {"EP2", 0.031, 1.59}, {"EP3", 0.065, 5.00},
                               {"EP4", 0.138, 1.69}, {"EP5", 0.214, 10.0}, {"EP6", 0.323, 2.71}};
  bool ok = true;
  std::string detail;
  for (size_t i = 0; i < table.size(); ++i) {
    const LossModel m = preset(table[i].name);
    const LossStats a = stationary(m);
    const LossStats e = trace_stats(sample_trace(m, 1000000, 0xC0FFEE + i));
    const double de = std::abs(e.epsilon - table[i].eps) / table[i].eps;
    const double dg = std::abs(e.gamma - table[i].gamma) / table[i].gamma;
    const bool analytic = std::abs(a.epsilon - table[i].eps) <= 1e-6 && std::abs(a.gamma - table[i].gamma) <= 1e-6;
    const bool row_ok = de <= 0.05 && dg <= 0.05 && analytic;
    ok = ok && row_ok;
    detail += fmt("%s%s eps %.4f (%+.1f%%) gamma %.2f (%+.1f%%)%s", i ? "; " : "", table[i].name, e.epsilon,
                  100 * (e.epsilon / table[i].eps - 1), e.gamma, 100 * (e.gamma / table[i].gamma - 1),
                  analytic ? "" : " analytic mismatch");
  }
  return {ok, detail};
}

Verdict iteration_counts() {
  int checked = 0, wrong = 0;
  for (int L = 2; L <= 32; ++L) {
    wrong += iteration_schedule(make_mode(ModeKind::kLc, L)).iterations() != L - 1;
    wrong += iteration_schedule(make_mode(ModeKind::kIsc, L)).iterations() != 0;
    checked += 2;
    for (int nd : {2, 4, 5}) {
      if (nd > L) continue;
      wrong += iteration_schedule(make_mode(ModeKind::kMdc, L, nd)).iterations() != L / nd - 1;
      ++checked;
    }
  }
  return {wrong == 0, fmt("%d/%d schedules match", checked - wrong, checked)};
}

Verdict fec_oracle() {
  int patterns = 0, mismatches = 0;
  for (int n = 1; n <= 12; ++n)
    for (int k = 1; k <= n; ++k)
      for (uint32_t mask = 0; mask < (1u << n); ++mask) {
        std::vector<uint8_t> trace(static_cast<size_t>(n));
        int received = 0;
        for (int i = 0; i < n; ++i) received += trace[i] = (mask >> i) & 1;
        mismatches += fec_channel(k, n - k, trace) != (received >= k);
        ++patterns;
      }
  // P(more than 3 of 10 lost), losses ~ Binomial(10, 0.2).
  double exact = 0;
  for (int lost = 4; lost <= 10; ++lost) {
    double c = 1;
    for (int j = 0; j < lost; ++j) c = c * (10 - j) / (j + 1);
    exact += c * std::pow(0.2, lost) * std::pow(0.8, 10 - lost);
  }
  const LossModel iid = iid_loss(0.2);
  const int trials = 100000;
  int failures = 0;
  for (int t = 0; t < trials; ++t) failures += !fec_channel(7, 3, sample_trace(iid, 10, 0xFEC0000ULL + t));
  const double rate = static_cast<double>(failures) / trials;
  const double sigma = std::sqrt(exact * (1 - exact) / trials);
  const bool ok = mismatches == 0 && std::abs(rate - exact) <= 3 * sigma;
  return {ok, fmt("%d/%d patterns agree; failure rate %.5f vs exact %.5f (3 sigma = %.5f)", patterns - mismatches,
                  patterns, rate, exact, 3 * sigma)};
}

Verdict propagation_law() {
  const Image& img = corpus(1)[0];
  const TokenGrid tokens = analyze(img, kCodec);
  struct M {
    ModeKind kind;
    int param;
  };
  int checks = 0, wrong = 0;
  for (const M& m : std::vector<M>{{ModeKind::kIsc, 0}, {ModeKind::kLc, 0}, {ModeKind::kMdc, 2}, {ModeKind::kSlc, 1}}) {
    const StreamConfig cfg = stream(m.kind, 5, m.param, 0);
    const ContextMode mode = cfg.context_mode();
    const auto pk = send_tokens(tokens, cfg, prior());
    const SlicePlan plan = build_plan(tokens.h, tokens.w, mode, cfg.plan_seed);
    for (uint32_t mask = 0; mask < 32; ++mask) {
      std::vector<uint8_t> f(5);
      for (int i = 0; i < 5; ++i) f[i] = (mask >> i) & 1;
      const ReceiveResult r = receive_flags(pk, f, cfg, prior(), shape());
      for (int l = 0; l < 5; ++l) {
        // Walk the dependency graph from l; every slice reached must be in.
        std::vector<int> stack{l}, seen(5, 0);
        bool ok = f[l];
        while (!stack.empty()) {
          const int s = stack.back();
          stack.pop_back();
          for (int k = 0; k < 5; ++k)
            if (mode.depends(s, k) && !seen[k]) {
              seen[k] = 1;
              ok = ok && f[k];
              stack.push_back(k);
            }
        }
        ++checks;
        wrong += static_cast<bool>(r.slice_decoded[l]) != ok;
        if (r.slice_decoded[l]) {
          for (const Position& p : plan.slice(l)) {
            const size_t q = tokens.index(p.row, p.col);
            if (!std::equal(tokens.token(q), tokens.token(q) + tokens.channels, r.decoded.token(q))) {
              ++wrong;
              break;
            }
          }
        }
      }
    }
  }
  return {wrong == 0, fmt("%d/%d slice outcomes match the closure predicate", checks - wrong, checks)};
}

Verdict mode_validation() {
  int presets = 0, bad = 0;
  for (int L = 1; L <= 32; ++L) {
    std::vector<ContextMode> modes{make_mode(ModeKind::kIsc, L), make_mode(ModeKind::kLc, L)};
    for (int nd = 1; nd <= L; ++nd) modes.push_back(make_mode(ModeKind::kMdc, L, nd));
    for (int e = 1; e < L; ++e) modes.push_back(make_mode(ModeKind::kSlc, L, e));
    for (const auto& m : modes) {
      ++presets;
      bad += validate(m).has_value();
    }
  }
  auto rows = [](std::vector<uint8_t> m) { return ContextMode(3, std::move(m)); };
  struct Case {
    ContextMode m;
    std::string want;
  };
  const std::vector<Case> cases{{rows({0, 1, 0, 0, 0, 0, 0, 0, 0}), "recoverability at (1,2)"},
                                {rows({0, 0, 0, 0, 1, 0, 0, 0, 0}), "recoverability at (2,2)"},
                                {rows({0, 0, 0, 1, 0, 0, 0, 1, 0}), "inheritance at (3,2,1)"}};
  int diagnosed = 0;
  std::string got;
  for (const auto& c : cases) {
    const auto v = validate(c.m);
    got += (got.empty() ? "" : ", ") + (v ? v->message() : std::string("accepted"));
    diagnosed += v && v->message() == c.want;
  }
  return {bad == 0 && diagnosed == 3,
          fmt("%d/%d presets valid; violations: %s", presets - bad, presets, got.c_str())};
}

Verdict efficiency_ordering() {
  const auto& images = corpus(10);
  double lc = 0, mdc = 0, isc = 0;
  for (size_t i = 0; i < 10; ++i) {
    const TokenGrid tokens = analyze(images[i], kCodec);
    auto bpp = [&](ModeKind k, int p) {
      const auto pk = send_tokens(tokens, stream(k, 10, p, i), prior());
      return evaluate(images[i], images[i], Outcome::kLossless, pk).bpp;
    };
    lc += bpp(ModeKind::kLc, 0) / 10;
    mdc += bpp(ModeKind::kMdc, 2) / 10;
    isc += bpp(ModeKind::kIsc, 0) / 10;
  }
  return {lc <= mdc && mdc <= isc, fmt("mean bpp LC %.4f, MDC2 %.4f, ISC %.4f (L=10)", lc, mdc, isc)};
}

Verdict resilience_ordering() {
  const auto& images = corpus(10);
  const Channel ep5 = preset_channel("EP5");
  double sum_isc = 0, sum_lc = 0;
  const int episodes = 200;
  std::vector<Transmission> tx_isc, tx_lc;
  const Scheme isc = mode_scheme(ModeKind::kIsc, 10), lc = mode_scheme(ModeKind::kLc, 10);
  for (size_t i = 0; i < 10; ++i) {
    tx_isc.push_back(transmit(images[i], isc, prior()));
    tx_lc.push_back(transmit(images[i], lc, prior()));
  }
  for (int e = 0; e < episodes; ++e) {
    const size_t i = static_cast<size_t>(e) % 10;
    const uint64_t seed = episode_seed(0x9, i, static_cast<uint64_t>(e), 5);
    sum_isc += run_episode(images[i], isc, tx_isc[i], ep5, seed, prior()).psnr_db;
    sum_lc += run_episode(images[i], lc, tx_lc[i], ep5, seed, prior()).psnr_db;
  }
  const double a = sum_isc / episodes, b = sum_lc / episodes;
  return {a >= b, fmt("EP5 mean PSNR ISC %.2f dB, LC %.2f dB over %d episodes each", a, b, episodes)};
}

Verdict concealment_value() {
  const auto& images = corpus(20);
  int better = 0, passthrough_ok = 0;
  double sum_c = 0, sum_p = 0;
  for (size_t i = 0; i < images.size(); ++i) {
    const TokenGrid truth = analyze(images[i], kCodec);
    std::vector<size_t> order(truth.positions());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(0xC0 + i);
    std::shuffle(order.begin(), order.end(), rng);
    const size_t n_mask = static_cast<size_t>(std::ceil(0.3 * static_cast<double>(order.size())));
    TokenGrid masked = truth;
    for (size_t j = 0; j < n_mask; ++j) {
      masked.known[order[j]] = 0;
      std::fill(masked.token(order[j]), masked.token(order[j]) + masked.channels, 0);
    }
    const PredictorOutput out = predict(masked, prior());
    const TokenGrid filled = conceal(masked, out);
    const PredictorOutput fallback = prior_output(prior(), out.positions);
    double se_c = 0, se_p = 0;
    for (size_t j = 0; j < out.positions.size(); ++j) {
      const size_t q = truth.index(out.positions[j].row, out.positions[j].col);
      for (int c = 0; c < truth.channels; ++c) {
        const double t = truth.token(q)[c];
        se_c += (filled.token(q)[c] - t) * (filled.token(q)[c] - t);
        se_p += (fallback.value(j, c) - t) * (fallback.value(j, c) - t);
      }
    }
    const double n = static_cast<double>(out.positions.size()) * truth.channels;
    sum_c += se_c / n;
    sum_p += se_p / n;
    better += se_c <= se_p;
    bool exact = true;
    for (size_t q = 0; q < truth.positions(); ++q)
      if (masked.known[q])
        exact = exact && filled.known[q] && std::equal(truth.token(q), truth.token(q) + truth.channels, filled.token(q));
    passthrough_ok += exact;
  }
  const int n = static_cast<int>(images.size());
  return {better * 10 >= n * 9 && passthrough_ok == n,
          fmt("concealed <= prior-fill on %d/%d images (mean token MSE %.2f vs %.2f); pass-through exact on %d/%d",
              better, n, sum_c / n, sum_p / n, passthrough_ok, n)};
}

Verdict failure_conventions() {
  const auto& images = corpus(10);
  // Every zero-decoded episode across modes and harsh channels.
  int zero = 0, zero_ok = 0;
  for (const char* name : {"EP5", "EP6"}) {
    const Channel ch = preset_channel(name);
    for (const Scheme& s : {mode_scheme(ModeKind::kLc, 4), mode_scheme(ModeKind::kSlc, 4, 1),
                            mode_scheme(ModeKind::kMdc, 4, 2), fec_scheme(3, 1, 4)}) {
      for (size_t i = 0; i < 4; ++i) {
        const Transmission tx = transmit(images[i], s, prior());
        for (uint64_t e = 0; e < 50; ++e) {
          const EpisodeResult r = run_episode(images[i], s, tx, ch, episode_seed(11, i, e, 0), prior());
          if (r.slices_decoded == 0) {
            ++zero;
            zero_ok += r.psnr_db == 13.0 && r.outcome == Outcome::kFailed;
          }
        }
      }
    }
  }
  // LC with the first packet dropped, other packets random.
  int lc_cases = 0, lc_failed = 0;
  std::mt19937_64 rng(12);
  for (size_t i = 0; i < 10; ++i) {
    const TokenGrid tokens = analyze(images[i], kCodec);
    for (int L : {2, 4, 10, 32}) {
      const StreamConfig cfg = stream(ModeKind::kLc, L, 0, i);
      const auto pk = send_tokens(tokens, cfg, prior());
      for (int t = 0; t < 5; ++t) {
        std::vector<uint8_t> f(static_cast<size_t>(L));
        for (auto& b : f) b = t == 0 ? 1 : static_cast<uint8_t>(rng() & 1);
        f[0] = 0;
        const ReceiveResult r = receive_flags(pk, f, cfg, prior(), shape());
        const Metrics m = evaluate(images[i], r.image, r.outcome, pk);
        ++lc_cases;
        lc_failed += r.outcome == Outcome::kFailed && m.psnr_db == 13.0;
      }
    }
  }
  return {zero > 0 && zero_ok == zero && lc_failed == lc_cases,
          fmt("%d/%d zero-decoded episodes at 13.0 dB; LC without packet 1 failed in %d/%d", zero_ok, zero,
              lc_failed, lc_cases)};
}

Verdict progressive_decoding() {
  const auto& images = corpus(10);
  int steps = 0, nondecreasing = 0, exact = 0;
  for (size_t i = 0; i < 10; ++i) {
    const StreamConfig cfg = stream(ModeKind::kLc, 32, 0, i);
    const TokenGrid tokens = analyze(images[i], kCodec);
    const auto pk = send_tokens(tokens, cfg, prior());
    const auto prog = progressive_receive(pk, cfg, prior(), shape());
    std::vector<double> psnr;
    for (const auto& r : prog) psnr.push_back(evaluate(images[i], r.image, r.outcome, pk).psnr_db);
    for (size_t k = 1; k < psnr.size(); ++k) {
      ++steps;
      nondecreasing += psnr[k] >= psnr[k - 1];
    }
    exact += prog.size() == 33 && prog[32].outcome == Outcome::kLossless &&
             prog[32].image == synthesize(tokens, kCodec, kH, kW);
  }
  return {nondecreasing * 100 >= steps * 95 && exact == 10,
          fmt("%d/%d prefix steps nondecreasing (%.1f%%, need 95%%); final step lossless on %d/10", nondecreasing,
              steps, 100.0 * nondecreasing / steps, exact)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"lossless transport", lossless_transport},
      {"range coder efficiency", coder_efficiency},
      {"loss presets", markov_presets},
      {"iteration counts", iteration_counts},
      {"FEC oracle", fec_oracle},
      {"error propagation", propagation_law},
      {"mode validation", mode_validation},
      {"efficiency ordering", efficiency_ordering},
      {"resilience ordering", resilience_ordering},
      {"concealment value", concealment_value},
      {"failure conventions", failure_conventions},
      {"progressive decoding", progressive_decoding},
  };
  (void)prior();
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("[%2zu] %s %-24s %s (%.1f s)\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first, v.detail.c_str(),
                secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
