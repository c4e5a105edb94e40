#include "resicomp/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "resicomp/corpus.hpp"
#include "resicomp/errors.hpp"

namespace resicomp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw InvalidArgument(key + ": not a number: '" + text + "'");
  return v;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  for (const auto& item : split_list(value)) out.push_back(parse_number<int>(key, item));
  return out;
}

using Setter = std::function<void(SweepSpec&, const std::string&)>;

struct KeyDef {
  std::string section;
  std::string key;
  Setter set;
};

const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = {
      {"sweep", "images", [](SweepSpec& s, const std::string& v) { s.images = v; }},
      {"sweep", "synthetic_size",
       [](SweepSpec& s, const std::string& v) {
         const auto x = v.find('x');
         if (x == std::string::npos) throw InvalidArgument("synthetic_size: expected HxW");
         s.synthetic_size = {parse_number<int>("synthetic_size", trim(v.substr(0, x))),
                             parse_number<int>("synthetic_size", trim(v.substr(x + 1)))};
       }},
      {"sweep", "modes",
       [](SweepSpec& s, const std::string& v) {
         s.modes.clear();
         for (const auto& item : split_list(v)) {
           const auto kind = parse_mode_kind(item);
           if (!kind) throw InvalidArgument("modes: unknown mode '" + item + "'");
           s.modes.push_back(*kind);
         }
       }},
      {"sweep", "N_d", [](SweepSpec& s, const std::string& v) { s.n_d = parse_number<int>("N_d", v); }},
      {"sweep", "enhancement_layers",
       [](SweepSpec& s, const std::string& v) {
         s.enhancement_layers = parse_number<int>("enhancement_layers", v);
       }},
      {"sweep", "L", [](SweepSpec& s, const std::string& v) { s.slices = parse_int_list("L", v); }},
      {"sweep", "beta",
       [](SweepSpec& s, const std::string& v) {
         if (v.empty() || v == "default") {
           s.beta.reset();
         } else {
           s.beta = parse_number<double>("beta", v);
         }
       }},
      {"sweep", "presets", [](SweepSpec& s, const std::string& v) { s.presets = split_list(v); }},
      {"sweep", "fec",
       [](SweepSpec& s, const std::string& v) {
         s.fec.clear();
         for (const auto& item : split_list(v)) {
           const auto c = item.find(':');
           if (c == std::string::npos) throw InvalidArgument("fec: expected N_k:N_r, got '" + item + "'");
           s.fec.emplace_back(parse_number<int>("fec", trim(item.substr(0, c))),
                              parse_number<int>("fec", trim(item.substr(c + 1))));
         }
       }},
      {"sweep", "uep_protect",
       [](SweepSpec& s, const std::string& v) { s.uep_protect = parse_int_list("uep_protect", v); }},
      {"sweep", "repetitions",
       [](SweepSpec& s, const std::string& v) { s.repetitions = parse_number<int>("repetitions", v); }},
      {"sweep", "output", [](SweepSpec& s, const std::string& v) { s.output = v; }},
      {"sweep", "seed", [](SweepSpec& s, const std::string& v) { s.seed = parse_number<uint64_t>("seed", v); }},
      {"sweep", "jobs", [](SweepSpec& s, const std::string& v) { s.jobs = parse_number<int>("jobs", v); }},
      {"codec", "quality",
       [](SweepSpec& s, const std::string& v) { s.codec.quality = parse_number<double>("quality", v); }},
      {"codec", "channels",
       [](SweepSpec& s, const std::string& v) { s.codec.channels = parse_number<int>("channels", v); }},
      {"codec", "clamp",
       [](SweepSpec& s, const std::string& v) { s.codec.clamp = parse_number<int>("clamp", v); }},
  };
  return defs;
}

const KeyDef* find_key(const std::string& section, const std::string& key) {
  for (const auto& d : key_defs())
    if (d.key == key && (section.empty() || d.section == section)) return &d;
  return nullptr;
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& config_keys() {
  static const auto keys = [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& d : key_defs()) out.emplace_back(d.section, d.key);
    return out;
  }();
  return keys;
}

void SweepSpec::validate() const {
  if (repetitions < 1) throw InvalidArgument("repetitions: must be >= 1");
  if (jobs < 1) throw InvalidArgument("jobs: must be >= 1");
  if (modes.empty() && fec.empty()) throw InvalidArgument("modes: nothing to run (no modes and no fec)");
  if (slices.empty()) throw InvalidArgument("L: at least one slice count required");
  for (int L : slices)
    if (L < 1 || L > 255) throw InvalidArgument("L: must be in 1..255, got " + std::to_string(L));
  for (ModeKind m : modes) {
    if (m == ModeKind::kCustom) throw InvalidArgument("modes: CUSTOM cannot be swept");
    if (m == ModeKind::kMdc && !n_d) throw InvalidArgument("N_d: required when modes includes MDC");
  }
  if (n_d && *n_d < 1) throw InvalidArgument("N_d: must be >= 1");
  if (enhancement_layers < 1) throw InvalidArgument("enhancement_layers: must be >= 1");
  if (beta && !(*beta >= 0.0 && *beta <= 65.535)) throw InvalidArgument("beta: must be in [0, 65.535]");
  if (presets.empty()) throw InvalidArgument("presets: at least one preset required");
  const auto names = preset_names();
  for (const auto& p : presets)
    if (p != "none" && std::find(names.begin(), names.end(), p) == names.end())
      throw InvalidArgument("presets: unknown preset '" + p + "'");
  for (const auto& [k, r] : fec)
    if (k < 1 || r < 0 || k + r > 255) throw InvalidArgument("fec: invalid pair " + std::to_string(k) + ":" + std::to_string(r));
  for (int p : uep_protect)
    for (int L : slices)
      if (p < 1 || p > L) throw InvalidArgument("uep_protect: slice " + std::to_string(p) + " outside 1.." + std::to_string(L));
  if (synthetic_size.first < 1 || synthetic_size.second < 1) throw InvalidArgument("synthetic_size: must be positive");
  try {
    codec.validate();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(std::string("codec: ") + e.what());
  }
  for (const Scheme& s : schemes()) {
    try {
      (void)s.stream.context_mode();
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("modes: " + s.label() + " with L=" + std::to_string(s.stream.slices) + ": " + e.what());
    }
  }
}

std::vector<Scheme> SweepSpec::schemes() const {
  std::vector<Scheme> out;
  const int beta_milli = beta ? beta_to_milli(*beta) : -1;
  for (int L : slices) {
    for (ModeKind m : modes) {
      int param = 0;
      if (m == ModeKind::kMdc) param = n_d.value_or(0);
      if (m == ModeKind::kSlc) param = enhancement_layers;
      Scheme s = mode_scheme(m, L, param);
      s.stream.codec = codec;
      s.stream.beta_milli = beta_milli;
      s.stream.plan_seed = seed;
      for (int p : uep_protect) s.stream.protect.push_back(p - 1);
      out.push_back(std::move(s));
    }
    for (const auto& [k, r] : fec) {
      Scheme s = fec_scheme(k, r, L);
      s.stream.codec = codec;
      s.stream.beta_milli = beta_milli;
      s.stream.plan_seed = seed;
      out.push_back(std::move(s));
    }
  }
  return out;
}

SweepSpec parse_config_text(const std::string& text, const std::string& origin) {
  SweepSpec spec;
  std::stringstream in(text);
  std::string line;
  std::string section;
  std::map<std::string, int> seen;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw InvalidArgument(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "sweep" && section != "codec") fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) fail("key '" + key + "' outside a section");
    const KeyDef* def = find_key(section, key);
    if (!def) fail("unknown key '" + key + "' in [" + section + "]");
    const std::string full = section + "." + key;
    if (seen.count(full)) fail("duplicate key '" + key + "' (first set on line " + std::to_string(seen[full]) + ")");
    seen[full] = lineno;
    try {
      def->set(spec, value);
    } catch (const InvalidArgument& e) {
      fail(e.what());
    }
  }
  spec.validate();
  return spec;
}

SweepSpec parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

void apply_override(SweepSpec& spec, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw InvalidArgument("override: expected key=value, got '" + assignment + "'");
  std::string key = trim(assignment.substr(0, eq));
  std::string section;
  if (const auto dot = key.find('.'); dot != std::string::npos) {
    section = key.substr(0, dot);
    key = key.substr(dot + 1);
  }
  const KeyDef* def = find_key(section, key);
  if (!def) throw InvalidArgument("override: unknown key '" + key + "'");
  def->set(spec, trim(assignment.substr(eq + 1)));
}

uint64_t episode_seed(uint64_t master, uint64_t image_index, uint64_t repetition, uint64_t preset_index) {
  return hash64({master, image_index, repetition, preset_index});
}

std::vector<SweepImage> load_sweep_images(const SweepSpec& spec) {
  std::vector<SweepImage> out;
  const std::string prefix = "synthetic:";
  if (spec.images.rfind(prefix, 0) == 0) {
    const int n = parse_number<int>("images", spec.images.substr(prefix.size()));
    if (n < 1) throw InvalidArgument("images: synthetic count must be >= 1");
    for (int i = 0; i < n; ++i)
      out.push_back({static_cast<uint64_t>(i), "synthetic-" + std::to_string(i),
                     synthetic_image(static_cast<uint64_t>(i), spec.synthetic_size.first,
                                     spec.synthetic_size.second, 1, spec.seed)});
    return out;
  }
  const auto files = list_images(spec.images);
  if (files.empty()) throw IoError("images: no .pgm/.ppm files in " + spec.images);
  for (size_t i = 0; i < files.size(); ++i)
    out.push_back({static_cast<uint64_t>(i), files[i].filename().string(), read_pnm(files[i])});
  return out;
}

std::vector<EpisodeResult> run_sweep(const SweepSpec& spec, const std::vector<SweepImage>& images,
                                     const PriorModel& prior) {
  spec.validate();
  const auto schemes = spec.schemes();
  std::vector<Channel> channels;
  for (const auto& p : spec.presets) channels.push_back(p == "none" ? lossless_channel() : preset_channel(p));

  const size_t n_img = images.size(), n_sch = schemes.size();
  std::vector<Scheme> bound(n_img * n_sch);
  std::vector<Transmission> tx(n_img * n_sch);
  const long n_tx = static_cast<long>(tx.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(spec.jobs)
  for (long t = 0; t < n_tx; ++t) {
    const size_t i = static_cast<size_t>(t) / n_sch;
    bound[t] = schemes[static_cast<size_t>(t) % n_sch];
    bound[t].stream.image_id = images[i].id;
    tx[t] = transmit(images[i].image, bound[t], prior);
  }

  const size_t n_ch = channels.size(), n_rep = static_cast<size_t>(spec.repetitions);
  std::vector<EpisodeResult> rows(n_img * n_sch * n_ch * n_rep);
  const long n_rows = static_cast<long>(rows.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(spec.jobs)
  for (long e = 0; e < n_rows; ++e) {
    size_t rest = static_cast<size_t>(e);
    const size_t rep = rest % n_rep;
    rest /= n_rep;
    const size_t ch = rest % n_ch;
    rest /= n_ch;
    const size_t t = rest;  // image * n_sch + scheme
    const size_t i = t / n_sch;
    const uint64_t seed = episode_seed(spec.seed, images[i].id, rep, ch);
    rows[e] = run_episode(images[i].image, bound[t], tx[t], channels[ch], seed, prior);
  }
  return rows;
}

void write_summary(std::ostream& out, const SweepSpec& spec, const std::vector<EpisodeResult>& rows) {
  struct Acc {
    double psnr = 0, bpp = 0;
    size_t n = 0, failed = 0;
  };
  std::vector<std::string> order;
  std::map<std::string, Acc> total;
  std::map<std::pair<std::string, std::string>, Acc> cell;
  for (const auto& r : rows) {
    const std::string key = r.scheme + "/L" + std::to_string(r.slices);
    if (!total.count(key)) order.push_back(key);
    for (Acc* a : {&total[key], &cell[{key, r.loss_preset}]}) {
      a->psnr += r.psnr_db;
      a->bpp += r.bpp;
      ++a->n;
      if (r.outcome == Outcome::kFailed) ++a->failed;
    }
  }
  char buf[64];
  out << "mean PSNR (dB)\n" << "scheme";
  for (const auto& p : spec.presets) out << '\t' << p;
  out << '\n';
  for (const auto& key : order) {
    out << key;
    for (const auto& p : spec.presets) {
      const Acc& a = cell[{key, p}];
      std::snprintf(buf, sizeof buf, "\t%.3f", a.n ? a.psnr / a.n : 0.0);
      out << buf;
    }
    out << '\n';
  }
  out << "\nscheme\tfailure_ratio\tmean_bpp\tepisodes\n";
  for (const auto& key : order) {
    const Acc& a = total[key];
    std::snprintf(buf, sizeof buf, "\t%.4f\t%.5f\t", static_cast<double>(a.failed) / a.n, a.bpp / a.n);
    out << key << buf << a.n << '\n';
  }
}

}  // namespace resicomp
