// resicomp: encode, decode, trace, simulate, sweep, modes, fit-model.
//
// Exit codes: 0 ok, 1 usage, 2 validation, 3 I/O.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "resicomp/corpus.hpp"
#include "resicomp/errors.hpp"
#include "resicomp/experiment.hpp"
#include "resicomp/pipeline.hpp"
#include "resicomp/sweep.hpp"

namespace fs = std::filesystem;
using namespace resicomp;

namespace {

struct StreamArgs {
  std::string mode = "LC";
  int slices = 10;
  int n_d = 0;
  int layers = 1;
  double beta = -1;
  uint64_t plan_seed = 0;
  uint64_t image_id = 0;
  std::vector<int> protect;  // one-based
  std::string matrix_file;
  double quality = CodecConfig{}.quality;
  int channels = CodecConfig{}.channels;
  int clamp = CodecConfig{}.clamp;

  void add(CLI::App* app) {
    app->add_option("--mode", mode, "ISC, LC, MDC, SLC or CUSTOM")->capture_default_str();
    app->add_option("--L", slices, "slice count")->capture_default_str();
    app->add_option("--N_d", n_d, "MDC descriptions");
    app->add_option("--E", layers, "SLC enhancement layers")->capture_default_str();
    app->add_option("--beta", beta, "slice-size exponent (default: per mode)");
    app->add_option("--plan-seed", plan_seed, "partition seed")->capture_default_str();
    app->add_option("--image-id", image_id)->capture_default_str();
    app->add_option("--protect", protect, "one-based slices to duplicate (UEP)")->delimiter(',');
    app->add_option("--matrix", matrix_file, "CUSTOM mode: L lines of 0/1");
    app->add_option("--quality", quality)->capture_default_str();
    app->add_option("--channels", channels)->capture_default_str();
    app->add_option("--clamp", clamp)->capture_default_str();
  }
};

std::vector<uint8_t> read_matrix(const fs::path& path, int& slices) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read matrix: " + path.string());
  std::vector<uint8_t> m;
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    std::vector<uint8_t> row;
    for (char ch : line) {
      if (ch == '0' || ch == '1') row.push_back(static_cast<uint8_t>(ch - '0'));
      else if (ch != ' ' && ch != '\t' && ch != ',' && ch != '\r') throw InvalidArgument("matrix: unexpected character");
    }
    if (row.empty()) continue;
    m.insert(m.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0 || m.size() != static_cast<size_t>(rows) * rows) throw InvalidArgument("matrix: not square");
  slices = rows;
  return m;
}

StreamConfig make_stream(const StreamArgs& a) {
  StreamConfig cfg;
  const auto kind = parse_mode_kind(a.mode);
  if (!kind) throw InvalidArgument("unknown mode '" + a.mode + "'");
  cfg.mode = *kind;
  cfg.slices = a.slices;
  if (cfg.mode == ModeKind::kMdc) {
    if (a.n_d < 1) throw InvalidArgument("--N_d is required for MDC");
    cfg.mode_param = a.n_d;
  }
  if (cfg.mode == ModeKind::kSlc) cfg.mode_param = a.layers;
  if (cfg.mode == ModeKind::kCustom) {
    if (a.matrix_file.empty()) throw InvalidArgument("--matrix is required for CUSTOM");
    cfg.custom_matrix = read_matrix(a.matrix_file, cfg.slices);
  }
  cfg.beta_milli = a.beta < 0 ? -1 : beta_to_milli(a.beta);
  cfg.plan_seed = a.plan_seed;
  cfg.image_id = a.image_id;
  for (int p : a.protect) {
    if (p < 1 || p > cfg.slices) throw InvalidArgument("--protect: slice " + std::to_string(p) + " out of range");
    cfg.protect.push_back(p - 1);
  }
  cfg.codec.quality = a.quality;
  cfg.codec.channels = a.channels;
  cfg.codec.clamp = a.clamp;
  cfg.codec.validate();
  (void)cfg.context_mode();
  return cfg;
}

PriorModel load_prior(const CodecConfig& codec, int planes) {
  if (const char* env = std::getenv("RESICOMP_MODEL"); env && *env) {
    PriorModel m = load_model(env);
    if (m.channels() != codec.channels)
      throw InvalidArgument("model " + std::string(env) + " has " + std::to_string(m.channels()) +
                            " channels, codec uses " + std::to_string(codec.channels));
    return m;
  }
  return default_prior(codec, planes);
}

// Out-of-band stream description written next to the packets.
void write_manifest(const fs::path& path, const StreamConfig& cfg, const ImageShape& shape) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "height=" << shape.height << "\nwidth=" << shape.width << "\nplanes=" << shape.planes
      << "\nmode=" << mode_name(cfg.mode) << "\nmode_param=" << cfg.mode_param << "\nL=" << cfg.slices
      << "\nbeta_milli=" << cfg.beta_milli << "\nplan_seed=" << cfg.plan_seed
      << "\nimage_id=" << cfg.image_id << "\nchannels=" << cfg.codec.channels
      << "\nclamp=" << cfg.codec.clamp << "\n";
  char q[64];
  std::snprintf(q, sizeof q, "%.17g", cfg.codec.quality);
  out << "quality=" << q << "\n";
  if (!cfg.custom_matrix.empty()) {
    out << "matrix=";
    for (uint8_t v : cfg.custom_matrix) out << static_cast<int>(v);
    out << "\n";
  }
  if (!out) throw IoError("cannot write " + path.string());
}

std::pair<StreamConfig, ImageShape> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw InvalidArgument("manifest: missing " + k);
    return it->second;
  };
  StreamConfig cfg;
  ImageShape shape;
  try {
    shape.height = std::stoi(get("height"));
    shape.width = std::stoi(get("width"));
    shape.planes = std::stoi(get("planes"));
    const auto kind = parse_mode_kind(get("mode"));
    if (!kind) throw InvalidArgument("manifest: bad mode");
    cfg.mode = *kind;
    cfg.mode_param = std::stoi(get("mode_param"));
    cfg.slices = std::stoi(get("L"));
    cfg.beta_milli = std::stoi(get("beta_milli"));
    cfg.plan_seed = std::stoull(get("plan_seed"));
    cfg.image_id = std::stoull(get("image_id"));
    cfg.codec.channels = std::stoi(get("channels"));
    cfg.codec.clamp = std::stoi(get("clamp"));
    cfg.codec.quality = std::stod(get("quality"));
  } catch (const std::logic_error& e) {
    if (auto* ia = dynamic_cast<const InvalidArgument*>(&e)) throw *ia;
    throw InvalidArgument("manifest: malformed value");
  }
  if (cfg.mode == ModeKind::kCustom)
    for (char ch : get("matrix")) cfg.custom_matrix.push_back(static_cast<uint8_t>(ch - '0'));
  return {cfg, shape};
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const WirePacket& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

std::string packet_name(size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "packet_%03zu.rcp", i);
  return buf;
}

Image load_input(const std::string& image, int synthetic, int height, int width) {
  if (!image.empty()) return read_pnm(image);
  return synthetic_image(static_cast<uint64_t>(synthetic), height, width);
}

int cmd_encode(const std::string& input, const fs::path& out_dir, const StreamArgs& args) {
  const Image img = read_pnm(input);
  const StreamConfig cfg = make_stream(args);
  const PriorModel prior = load_prior(cfg.codec, img.planes);
  const auto packets = send(img, cfg, prior);
  fs::create_directories(out_dir);
  size_t bytes = 0;
  for (size_t i = 0; i < packets.size(); ++i) {
    const WirePacket w = to_wire(packets[i]);
    bytes += w.size();
    write_file(out_dir / packet_name(i), w);
  }
  write_manifest(out_dir / "manifest.txt", cfg, {img.height, img.width, img.planes});
  const Metrics m = evaluate(img, img, Outcome::kLossless, packets);
  std::printf("packets=%zu bytes=%zu bpp=%.6f bpp_total=%.6f\n", packets.size(), bytes, m.bpp, m.bpp_total);
  return 0;
}

int cmd_decode(const fs::path& dir, const std::string& trace_file, size_t episode, const std::string& out,
               const std::string& original) {
  const auto [cfg, shape] = read_manifest(dir / "manifest.txt");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".rcp") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<WirePacket> wire;
  for (const auto& f : files) {
    const std::string s = read_file(f);
    wire.emplace_back(s.begin(), s.end());
  }
  LossTrace trace(wire.size(), 1);
  if (!trace_file.empty()) {
    const auto traces = read_traces(trace_file);
    if (episode >= traces.size()) throw InvalidArgument("trace file has no episode " + std::to_string(episode));
    if (traces[episode].size() < wire.size())
      throw InvalidArgument("trace episode shorter than the packet count");
    trace.assign(traces[episode].begin(), traces[episode].begin() + static_cast<std::ptrdiff_t>(wire.size()));
  }
  const PriorModel prior = load_prior(cfg.codec, shape.planes);
  const Delivery d = apply_loss(wire, trace);
  const ReceiveResult r = receive(d.packets, cfg, prior, shape);
  write_pnm(out, r.image);
  size_t payload = 0;
  for (const auto& w : wire) payload += (w.size() - kHeaderBytes) * 8;
  std::printf("outcome=%s slices_decoded=%d/%d received=%zu/%zu bpp=%.6f", outcome_name(r.outcome).c_str(),
              r.slices_decoded(), cfg.slices, d.packets.size(), wire.size(),
              static_cast<double>(payload) / (static_cast<double>(shape.height) * shape.width));
  if (!original.empty()) {
    const Image orig = read_pnm(original);
    const double p = r.outcome == Outcome::kFailed ? kFailedPsnr : psnr(orig, r.image);
    std::printf(" psnr_db=%.4f", p);
  }
  std::printf("\n");
  return 0;
}

int cmd_trace(const std::string& name, size_t n, size_t episodes, uint64_t seed, const std::string& out) {
  const LossModel model = preset(name);
  std::vector<LossTrace> traces;
  for (size_t e = 0; e < episodes; ++e) traces.push_back(sample_trace(model, n, hash64({seed, e})));
  write_traces(out, traces);
  std::vector<uint8_t> all;
  for (const auto& t : traces) all.insert(all.end(), t.begin(), t.end());
  const LossStats s = trace_stats(all);
  std::printf("preset=%s packets=%zu episodes=%zu epsilon=%.5f gamma=%.4f target_epsilon=%.3f target_gamma=%.3f\n",
              name.c_str(), n, episodes, s.epsilon, s.gamma, model.preset->epsilon, model.preset->gamma);
  return 0;
}

int cmd_simulate(const std::string& image, int synthetic, int height, int width, const StreamArgs& args,
                 const std::string& fec, const std::string& preset_name, uint64_t seed) {
  const Image img = load_input(image, synthetic, height, width);
  Scheme scheme;
  scheme.stream = make_stream(args);
  if (!fec.empty()) {
    const auto c = fec.find(':');
    if (c == std::string::npos) throw InvalidArgument("--fec: expected N_k:N_r");
    const StreamConfig stream = scheme.stream;
    try {
      scheme = fec_scheme(std::stoi(fec.substr(0, c)), std::stoi(fec.substr(c + 1)), stream.slices);
    } catch (const std::logic_error& e) {
      if (auto* ia = dynamic_cast<const InvalidArgument*>(&e)) throw *ia;
      throw InvalidArgument("--fec: expected N_k:N_r");
    }
    scheme.stream = stream;
    scheme.stream.mode = ModeKind::kLc;
    scheme.stream.protect.clear();
  }
  const Channel ch = preset_name == "none" ? lossless_channel() : preset_channel(preset_name);
  const PriorModel prior = load_prior(scheme.stream.codec, img.planes);
  const EpisodeResult r = run_episode(img, scheme, ch, seed, prior);
  write_csv_header(std::cout);
  write_csv_row(std::cout, r);
  return 0;
}

int cmd_sweep(const std::string& config, const std::vector<std::string>& sets, int jobs,
              const std::string& output, bool quiet) {
  SweepSpec spec = config.empty() ? SweepSpec{} : parse_config(config);
  for (const auto& s : sets) apply_override(spec, s);
  if (jobs > 0) spec.jobs = jobs;
  if (!output.empty()) spec.output = output;
  spec.validate();
  const auto images = load_sweep_images(spec);
  const PriorModel prior = load_prior(spec.codec, images.front().image.planes);
  const auto rows = run_sweep(spec, images, prior);
  {
    std::ofstream out(spec.output);
    if (!out) throw IoError("cannot write " + spec.output);
    write_csv_header(out);
    for (const auto& r : rows) write_csv_row(out, r);
  }
  const std::string summary_path = spec.output + ".summary.txt";
  std::ofstream sum(summary_path);
  if (!sum) throw IoError("cannot write " + summary_path);
  write_summary(sum, spec, rows);
  if (!quiet) write_summary(std::cout, spec, rows);
  std::printf("wrote %zu rows to %s\n", rows.size(), spec.output.c_str());
  return 0;
}

void print_mode(const ContextMode& m) {
  const Schedule s = iteration_schedule(m);
  std::printf("%s  K_t=%d\n", m.describe().c_str(), s.iterations());
  for (int l = 0; l < m.slices(); ++l) {
    std::printf("  ");
    for (int k = 0; k < m.slices(); ++k) std::printf("%d", m.depends(l, k) ? 1 : 0);
    std::printf("\n");
  }
}

int cmd_modes(int slices, int n_d, int layers, const std::string& check) {
  if (!check.empty()) {
    int L = 0;
    auto matrix = read_matrix(check, L);
    const ContextMode m(L, std::move(matrix));
    if (auto v = validate(m)) {
      std::printf("invalid: %s\n", v->message().c_str());
      return 2;
    }
    print_mode(m);
    std::printf("valid\n");
    return 0;
  }
  print_mode(make_mode(ModeKind::kIsc, slices));
  print_mode(make_mode(ModeKind::kLc, slices));
  print_mode(make_mode(ModeKind::kMdc, slices, n_d));
  print_mode(make_mode(ModeKind::kSlc, slices, layers));
  return 0;
}

int cmd_fit(const std::string& images, const CodecConfig& codec, const std::string& out) {
  SweepSpec spec;
  spec.images = images;
  const auto imgs = load_sweep_images(spec);
  std::vector<TokenGrid> grids;
  for (const auto& i : imgs) grids.push_back(analyze(i.image, codec));
  save_model(out, fit_prior(grids));
  std::printf("fitted %zu images, %d channels -> %s\n", imgs.size(), codec.channels, out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Packet-loss-resilient learned-style image transport"};
  app.require_subcommand(1);

  StreamArgs enc_args;
  std::string enc_input, enc_out;
  auto* enc = app.add_subcommand("encode", "encode an image into packet files plus a manifest");
  enc->add_option("--input", enc_input, "PGM/PPM image")->required();
  enc->add_option("--out", enc_out, "output directory")->required();
  enc_args.add(enc);

  std::string dec_dir, dec_trace, dec_out, dec_orig;
  size_t dec_episode = 0;
  auto* dec = app.add_subcommand("decode", "decode a packet directory through a loss trace");
  dec->add_option("--packets", dec_dir, "directory written by encode")->required();
  dec->add_option("--trace", dec_trace, "trace file (default: no loss)");
  dec->add_option("--episode", dec_episode, "trace line to use")->capture_default_str();
  dec->add_option("--out", dec_out, "output image")->required();
  dec->add_option("--original", dec_orig, "reference image for PSNR");

  std::string tr_preset, tr_out = "trace.txt";
  size_t tr_n = 1000, tr_episodes = 1;
  uint64_t tr_seed = 0;
  auto* tr = app.add_subcommand("trace", "sample loss traces from a preset");
  tr->add_option("--preset", tr_preset, "EP1..EP6")->required();
  tr->add_option("-n,--packets", tr_n, "packets per episode")->capture_default_str();
  tr->add_option("--episodes", tr_episodes)->capture_default_str();
  tr->add_option("--seed", tr_seed)->capture_default_str();
  tr->add_option("--out", tr_out)->capture_default_str();

  StreamArgs sim_args;
  std::string sim_image, sim_fec, sim_preset = "none";
  int sim_synth = 0, sim_h = 128, sim_w = 192;
  uint64_t sim_seed = 0;
  auto* sim = app.add_subcommand("simulate", "run one episode and print its CSV row");
  sim->add_option("--image", sim_image, "PGM/PPM image (default: synthetic)");
  sim->add_option("--synthetic", sim_synth, "synthetic image index")->capture_default_str();
  sim->add_option("--height", sim_h)->capture_default_str();
  sim->add_option("--width", sim_w)->capture_default_str();
  sim->add_option("--preset", sim_preset, "EP1..EP6 or none")->capture_default_str();
  sim->add_option("--seed", sim_seed, "episode seed")->capture_default_str();
  sim->add_option("--fec", sim_fec, "FEC baseline N_k:N_r");
  sim_args.add(sim);

  std::string sw_config, sw_output;
  std::vector<std::string> sw_sets;
  int sw_jobs = 0;
  bool sw_quiet = false;
  auto* sw = app.add_subcommand("sweep", "run a configured sweep; writes CSV and summary");
  sw->add_option("--config", sw_config, "config file");
  sw->add_option("--set", sw_sets, "override, e.g. --set L=4,10");
  sw->add_option("--jobs", sw_jobs, "parallel episodes");
  sw->add_option("--output", sw_output, "CSV path");
  sw->add_flag("--quiet", sw_quiet, "do not print the summary");

  int md_L = 10, md_nd = 2, md_e = 1;
  std::string md_check;
  auto* md = app.add_subcommand("modes", "print preset context matrices or check a custom one");
  md->add_option("--L", md_L)->capture_default_str();
  md->add_option("--N_d", md_nd)->capture_default_str();
  md->add_option("--E", md_e)->capture_default_str();
  md->add_option("--check", md_check, "matrix file to validate");

  std::string fit_images = "synthetic:16", fit_out;
  CodecConfig fit_codec;
  auto* fit = app.add_subcommand("fit-model", "fit the predictor prior to a corpus");
  fit->add_option("--images", fit_images, "directory or synthetic:N")->capture_default_str();
  fit->add_option("--out", fit_out)->required();
  fit->add_option("--quality", fit_codec.quality)->capture_default_str();
  fit->add_option("--channels", fit_codec.channels)->capture_default_str();
  fit->add_option("--clamp", fit_codec.clamp)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*enc) return cmd_encode(enc_input, enc_out, enc_args);
    if (*dec) return cmd_decode(dec_dir, dec_trace, dec_episode, dec_out, dec_orig);
    if (*tr) return cmd_trace(tr_preset, tr_n, tr_episodes, tr_seed, tr_out);
    if (*sim) return cmd_simulate(sim_image, sim_synth, sim_h, sim_w, sim_args, sim_fec, sim_preset, sim_seed);
    if (*sw) return cmd_sweep(sw_config, sw_sets, sw_jobs, sw_output, sw_quiet);
    if (*md) return cmd_modes(md_L, md_nd, md_e, md_check);
    if (*fit) {
      fit_codec.validate();
      return cmd_fit(fit_images, fit_codec, fit_out);
    }
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
