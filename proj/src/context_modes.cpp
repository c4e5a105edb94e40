#include "resicomp/context_modes.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "resicomp/errors.hpp"

namespace resicomp {

std::string mode_name(ModeKind kind) {
  switch (kind) {
    case ModeKind::kIsc: return "ISC";
    case ModeKind::kLc: return "LC";
    case ModeKind::kMdc: return "MDC";
    case ModeKind::kSlc: return "SLC";
    case ModeKind::kCustom: return "CUSTOM";
  }
  return "?";
}

std::optional<ModeKind> parse_mode_kind(const std::string& name) {
  std::string up;
  for (char ch : name) up += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (up == "ISC") return ModeKind::kIsc;
  if (up == "LC") return ModeKind::kLc;
  if (up == "MDC") return ModeKind::kMdc;
  if (up == "SLC") return ModeKind::kSlc;
  if (up == "CUSTOM") return ModeKind::kCustom;
  return std::nullopt;
}

double default_beta(ModeKind kind) {
  switch (kind) {
    case ModeKind::kIsc: return 0.0;
    case ModeKind::kLc: return 1.0;
    case ModeKind::kMdc: return 0.5;
    case ModeKind::kSlc: return 1.0;
    case ModeKind::kCustom: return 1.0;
  }
  return 1.0;
}

ContextMode::ContextMode(int slices, std::vector<uint8_t> matrix)
    : slices_(slices), kind_(ModeKind::kCustom), param_(0), matrix_(std::move(matrix)) {
  if (slices < 1) throw InvalidArgument("context mode needs at least one slice");
  if (matrix_.size() != static_cast<size_t>(slices) * slices)
    throw InvalidArgument("context matrix must be L x L");
  for (auto& v : matrix_) v = v ? 1 : 0;
}

std::vector<int> ContextMode::contexts(int l) const {
  std::vector<int> out;
  for (int k = 0; k < slices_; ++k)
    if (depends(l, k)) out.push_back(k);
  return out;
}

std::string ContextMode::describe() const {
  std::ostringstream out;
  out << mode_name(kind_);
  if (kind_ == ModeKind::kMdc) out << "(N_d=" << param_ << ")";
  if (kind_ == ModeKind::kSlc) out << "(E=" << param_ << ")";
  out << " L=" << slices_;
  return out.str();
}

ContextMode make_mode(ModeKind kind, int slices, int param) {
  if (slices < 1 || slices > 255) throw InvalidArgument("slice count must be in 1..255");
  ContextMode m;
  m.slices_ = slices;
  m.kind_ = kind;
  m.matrix_.assign(static_cast<size_t>(slices) * slices, 0);
  auto set = [&](int l, int k) { m.matrix_[static_cast<size_t>(l) * slices + k] = 1; };

  switch (kind) {
    case ModeKind::kIsc:
      break;
    case ModeKind::kLc:
      for (int l = 0; l < slices; ++l)
        for (int k = 0; k < l; ++k) set(l, k);
      break;
    case ModeKind::kMdc: {
      if (param < 1 || param > slices) throw InvalidArgument("MDC needs 1 <= N_d <= L");
      m.param_ = param;
      // Chains of length floor(L / N_d); the L mod N_d leftover slices branch
      // off their description next to its last chain member, so they share
      // that member's context set and pass.
      const int full = slices / param;
      for (int l = 0; l < slices; ++l) {
        const int depth_cap = l / param < full ? l / param : full - 1;
        for (int t = 0; t < depth_cap; ++t) set(l, t * param + l % param);
      }
      break;
    }
    case ModeKind::kSlc: {
      if (param < 1) throw InvalidArgument("SLC needs at least one enhancement layer");
      if (slices > 1 && param > slices - 1)
        throw InvalidArgument("SLC needs at least one slice per enhancement layer");
      m.param_ = param;
      const int rest = slices - 1;
      std::vector<int> layer(static_cast<size_t>(slices), 0);  // 0 = base
      int s = 1;
      for (int e = 0; e < param && s < slices; ++e) {
        const int size = rest / param + (e < rest % param ? 1 : 0);
        for (int i = 0; i < size; ++i) layer[s++] = e + 1;
      }
      for (int l = 1; l < slices; ++l)
        for (int k = 0; k < l; ++k)
          if (layer[k] < layer[l]) set(l, k);
      break;
    }
    case ModeKind::kCustom:
      throw InvalidArgument("CUSTOM modes are built from an explicit matrix");
  }
  return m;
}

std::string ModeViolation::message() const {
  std::ostringstream out;
  if (rule == Rule::kRecoverability) {
    out << "recoverability at (" << l << "," << k << ")";
  } else {
    out << "inheritance at (" << l << "," << k << "," << j << ")";
  }
  return out.str();
}

std::optional<ModeViolation> validate(const ContextMode& mode) {
  const int n = mode.slices();
  for (int l = 0; l < n; ++l)
    for (int k = l; k < n; ++k)
      if (mode.depends(l, k))
        return ModeViolation{ModeViolation::Rule::kRecoverability, l + 1, k + 1, 0};
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < l; ++k) {
      if (!mode.depends(l, k)) continue;
      for (int j = 0; j < k; ++j)
        if (mode.depends(k, j) && !mode.depends(l, j))
          return ModeViolation{ModeViolation::Rule::kInheritance, l + 1, k + 1, j + 1};
    }
  return std::nullopt;
}

std::vector<int> context_counts(const ContextMode& mode) {
  std::vector<int> counts(static_cast<size_t>(mode.slices()), 0);
  for (int l = 0; l < mode.slices(); ++l)
    for (int k = 0; k < mode.slices(); ++k) counts[l] += mode.depends(l, k) ? 1 : 0;
  return counts;
}

Schedule iteration_schedule(const ContextMode& mode) {
  if (auto v = validate(mode)) throw InvalidArgument("invalid context mode: " + v->message());
  const int n = mode.slices();
  Schedule sched;
  sched.depth.assign(static_cast<size_t>(n), 0);
  int max_depth = 0;
  for (int l = 0; l < n; ++l) {
    int d = 0;
    for (int k = 0; k < l; ++k)
      if (mode.depends(l, k)) d = std::max(d, sched.depth[k] + 1);
    sched.depth[l] = d;
    max_depth = std::max(max_depth, d);
  }
  sched.passes.resize(static_cast<size_t>(max_depth) + 1);
  for (int d = 0; d <= max_depth; ++d) {
    std::map<std::vector<int>, std::vector<int>> by_context;
    std::vector<std::vector<int>> order;
    for (int l = 0; l < n; ++l) {
      if (sched.depth[l] != d) continue;
      auto ctx = mode.contexts(l);
      auto [it, inserted] = by_context.try_emplace(ctx);
      if (inserted) order.push_back(ctx);
      it->second.push_back(l);
    }
    for (auto& ctx : order) sched.passes[d].push_back(SliceGroup{ctx, by_context[ctx]});
  }
  return sched;
}

}  // namespace resicomp
