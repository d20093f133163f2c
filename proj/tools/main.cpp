#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wavediff/audio_io.hpp"
#include "wavediff/bench.hpp"
#include "wavediff/conditional.hpp"
#include "wavediff/io.hpp"
#include "wavediff/pipeline.hpp"

namespace {

using namespace wavediff;

int cmd_dwt(const std::string& in, const std::string& out,
            const std::string& basis_name, int levels) {
  const WaveletBasis basis = basis_by_name(basis_name);
  const Waveform w = read_wav(in);
  const WaveletPacket packet = decompose(w, basis, levels);
  save_packet(packet, out);
  std::printf("dwt: %s -> %s  basis=%s levels=%d shape=%lldx%lld pad=%lld\n",
              in.c_str(), out.c_str(), to_string(packet.basis).c_str(),
              packet.levels, (long long)packet.channels(),
              (long long)packet.frames(), (long long)packet.pad_len);
  return 0;
}

int cmd_idwt(const std::string& in, const std::string& out,
             const std::string& format) {
  const WaveletPacket packet = load_packet(in);
  const Waveform w = reconstruct(packet);
  const WavFormat fmt = format == "pcm16" ? WavFormat::pcm16
                                          : WavFormat::float32;
  write_wav(w, out, fmt);
  std::printf("idwt: %s -> %s  samples=%lld rate=%g\n", in.c_str(),
              out.c_str(), (long long)w.samples.size(), w.sample_rate);
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out,
              const std::string& trace_path,
              const std::optional<std::uint64_t>& seed) {
  RunConfig config = load_run_config(config_path);
  if (seed) config.seed = *seed;
  const TrainArtifacts artifacts = train(config);
  save_checkpoint(artifacts.checkpoint, out);
  save_loss_trace(artifacts.trace, trace_path);
  double first = 0.0, last = 0.0;
  if (!artifacts.trace.empty()) {
    first = artifacts.trace.front();
    last = artifacts.trace.back();
  }
  std::printf("train: %d steps, loss %.6f -> %.6f, checkpoint %s, trace %s\n",
              int(artifacts.trace.size()), first, last, out.c_str(),
              trace_path.c_str());
  return 0;
}

int cmd_generate(const std::string& config_path, const std::string& ckpt,
                 const std::string& out, long long length,
                 const std::optional<std::uint64_t>& seed) {
  const RunConfig config = load_run_config(config_path);
  const Checkpoint checkpoint = load_checkpoint(ckpt);
  Rng rng(seed.value_or(config.seed));
  const Waveform w = generate(config, checkpoint, Eigen::Index(length), rng);
  write_wav(w, out, WavFormat::float32);
  std::printf("generate: %lld samples -> %s\n", (long long)w.samples.size(),
              out.c_str());
  return 0;
}

int cmd_enhance(const std::string& config_path, const std::string& ckpt,
                const std::string& in, const std::string& out,
                const std::optional<std::uint64_t>& seed) {
  const RunConfig config = load_run_config(config_path);
  const Checkpoint checkpoint = load_checkpoint(ckpt);
  Rng rng(seed.value_or(config.seed));
  const Waveform noisy = read_wav(in);
  const Waveform clean = enhance(config, checkpoint, noisy, rng);
  write_wav(clean, out, WavFormat::float32);
  std::printf("enhance: %s -> %s (%lld samples)\n", in.c_str(), out.c_str(),
              (long long)clean.samples.size());
  return 0;
}

int cmd_bench(const std::string& compare, const std::string& mode,
              long long length, int reps, int warmup, double seconds,
              std::uint64_t seed) {
  DenoiserArch arch;
  arch.hidden = 16;
  arch.blocks = 4;

  if (compare != "raw,wavelet,multilevel")
    throw std::invalid_argument(
        "--compare currently supports exactly 'raw,wavelet,multilevel'");

  if (mode == "macs" || mode == "all") {
    const MacReport report = compare_macs(arch, length, 2);
    std::cout << report.to_table() << "\n" << report.to_records();
  }
  if (mode == "timing" || mode == "all") {
    auto config_for = [&](const char* label, int channels) {
      TimingConfig cfg;
      cfg.label = label;
      cfg.arch = arch;
      cfg.arch.in_channels = channels;
      cfg.frames = Eigen::Index(length) / channels;
      cfg.seed = seed;
      return cfg;
    };
    for (const auto& [label, ch] :
         std::vector<std::pair<const char*, int>>{
             {"raw", 1}, {"wavelet", 2}, {"multilevel", 4}}) {
      const TimingConfig cfg = config_for(label, ch);
      const TimingReport train_r = time_training_step(cfg, reps, warmup);
      const TimingReport sample_r = time_sampling(cfg, seconds);
      std::printf("%-11s train step mean %.4fs (std %.4f, min %.4f)  rtf %.4f\n",
                  label, train_r.mean_seconds, train_r.std_seconds,
                  train_r.min_seconds, sample_r.rtf);
      std::cout << train_r.to_records() << sample_r.to_records();
    }
  }
  if (mode != "macs" && mode != "timing" && mode != "all")
    throw std::invalid_argument("--mode must be macs, timing, or all");
  return 0;
}

int cmd_schedule_dump(int T, double beta_start, double beta_end,
                      const std::string& m_kind) {
  const NoiseSchedule s = linear_schedule(T, beta_start, beta_end);
  std::optional<ConditionalSchedule> cs;
  std::string note;
  try {
    cs = interpolation_schedule(s, m_schedule_from_string(m_kind));
  } catch (const std::invalid_argument& e) {
    note = e.what();  // infeasible m-schedule; dump the base columns anyway
  }
  if (cs) {
    std::printf("%4s %12s %12s %14s %12s %12s\n", "t", "beta", "alpha",
                "alpha_bar", "m", "delta");
    for (int t = 1; t <= T; ++t)
      std::printf("%4d %12.6e %12.9f %14.9f %12.9f %12.9f\n", t, s.beta_at(t),
                  s.alpha_at(t), s.alpha_bar_at(t), cs->m_at(t),
                  cs->delta_at(t));
  } else {
    std::printf("%4s %12s %12s %14s\n", "t", "beta", "alpha", "alpha_bar");
    for (int t = 1; t <= T; ++t)
      std::printf("%4d %12.6e %12.9f %14.9f\n", t, s.beta_at(t), s.alpha_at(t),
                  s.alpha_bar_at(t));
    std::printf("note: conditional columns omitted (%s)\n", note.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wavediff: wavelet-domain diffusion toolkit for 1-D audio"};
  app.require_subcommand(1);

  std::string in, out, basis = "haar", format = "float32";
  std::string config_path, ckpt = "model.ckpt", trace_path = "losses.txt";
  std::string compare = "raw,wavelet,multilevel", bench_mode = "macs";
  std::string m_kind = "ratio";
  int levels = 1, reps = 10, warmup = 3, T = 50;
  long long length = 16000, bench_length = 16384;
  double seconds = 1.0, beta_start = 1e-4, beta_end = 0.05;
  std::optional<std::uint64_t> seed;
  std::uint64_t bench_seed = 1;

  auto* dwt = app.add_subcommand("dwt", "Decompose a WAV into a packet file");
  dwt->add_option("input", in, "input .wav")->required();
  dwt->add_option("output", out, "output .pkt")->required();
  dwt->add_option("--basis", basis, "wavelet basis")->capture_default_str();
  dwt->add_option("--levels", levels, "decomposition levels")
      ->capture_default_str();

  auto* idwt = app.add_subcommand("idwt", "Reconstruct a WAV from a packet");
  idwt->add_option("input", in, "input .pkt")->required();
  idwt->add_option("output", out, "output .wav")->required();
  idwt->add_option("--format", format, "pcm16 or float32")
      ->capture_default_str();

  auto* train = app.add_subcommand("train", "Train a denoiser per config");
  train->add_option("--config", config_path, "run config file")->required();
  train->add_option("--out", ckpt, "checkpoint path")->capture_default_str();
  train->add_option("--trace", trace_path, "loss trace path")
      ->capture_default_str();
  train->add_option("--seed", seed, "override config seed");

  auto* gen = app.add_subcommand("generate", "Sample audio unconditionally");
  gen->add_option("--config", config_path, "run config file")->required();
  gen->add_option("--checkpoint", ckpt, "checkpoint path")->required();
  gen->add_option("--out", out, "output .wav")->required();
  gen->add_option("--length", length, "samples to generate")
      ->capture_default_str();
  gen->add_option("--seed", seed, "override config seed");

  auto* enh = app.add_subcommand("enhance", "Denoise a noisy WAV");
  enh->add_option("--config", config_path, "run config file")->required();
  enh->add_option("--checkpoint", ckpt, "checkpoint path")->required();
  enh->add_option("--in", in, "noisy input .wav")->required();
  enh->add_option("--out", out, "enhanced output .wav")->required();
  enh->add_option("--seed", seed, "override config seed");

  auto* bench = app.add_subcommand("bench", "MAC model and wall-clock timing");
  bench->add_option("--compare", compare, "shape set to compare")
      ->capture_default_str();
  bench->add_option("--mode", bench_mode, "macs, timing, or all")
      ->capture_default_str();
  bench->add_option("--length", bench_length, "raw sample count")
      ->capture_default_str();
  bench->add_option("--reps", reps, "timed repetitions")->capture_default_str();
  bench->add_option("--warmup", warmup, "warmup repetitions")
      ->capture_default_str();
  bench->add_option("--seconds", seconds, "audio seconds for RTF")
      ->capture_default_str();
  bench->add_option("--seed", bench_seed, "workload seed")
      ->capture_default_str();

  auto* dump = app.add_subcommand("schedule-dump", "Print schedule tables");
  dump->add_option("--T", T, "step count")->capture_default_str();
  dump->add_option("--beta-start", beta_start, "first beta")
      ->capture_default_str();
  dump->add_option("--beta-end", beta_end, "last beta")->capture_default_str();
  dump->add_option("--m-schedule", m_kind, "ratio, linear, or zero")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (dwt->parsed()) return cmd_dwt(in, out, basis, levels);
    if (idwt->parsed()) {
      if (format != "pcm16" && format != "float32")
        throw std::invalid_argument("--format must be pcm16 or float32");
      return cmd_idwt(in, out, format);
    }
    if (train->parsed()) return cmd_train(config_path, ckpt, trace_path, seed);
    if (gen->parsed())
      return cmd_generate(config_path, ckpt, out, length, seed);
    if (enh->parsed())
      return cmd_enhance(config_path, ckpt, in, out, seed);
    if (bench->parsed())
      return cmd_bench(compare, bench_mode, bench_length, reps, warmup,
                       seconds, bench_seed);
    if (dump->parsed())
      return cmd_schedule_dump(T, beta_start, beta_end, m_kind);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
