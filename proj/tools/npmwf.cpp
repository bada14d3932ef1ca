// npmwf: multichannel speech enhancement with a neural-controlled PMWF.
//
//   npmwf enhance --input mix.wav --weights w.npw1 --config cfg.json --output out.wav [--reference clean.wav]
//   npmwf metrics --reference clean.wav --estimate out.wav [...more pairs]
//   npmwf report --weights w.npw1
//   npmwf dump-params --weights w.npw1 --out params.csv
//
// Failures print one line "error: <Code>: <message>" to stderr and exit 1.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "npmwf/npmwf.hpp"

namespace {

using json = nlohmann::json;
using namespace npmwf;

struct CliConfig {
  EngineConfig engine;
  std::string mask_provider = "neural";
  std::string mask_file;
};

const std::set<std::string> kConfigKeys = {"beta_mode",    "beta_value",  "alpha_mode",   "alpha_value",
                                           "loading",      "ref_channel", "mask_provider", "epsilon_init",
                                           "mask_file",    "oracle_floor", "oracle_clip"};

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config key '") + key + "': " + e.what());
  }
}

CliConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, "config is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a flat JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kConfigKeys.count(key)) throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
  }

  CliConfig c;
  auto& ctl = c.engine.controls;
  ctl.beta_mode = parse_beta_mode(get_or<std::string>(j, "beta_mode", "spp"));
  ctl.beta_value = get_or(j, "beta_value", 0.0);
  ctl.alpha_mode = parse_alpha_mode(get_or<std::string>(j, "alpha_mode", "freq"));
  ctl.alpha_value = get_or(j, "alpha_value", 0.1);
  c.engine.loading = get_or(j, "loading", c.engine.loading);
  const long ref = get_or(j, "ref_channel", 0L);
  if (ref < 0) throw Error(ErrorCode::InvalidConfig, "ref_channel must be >= 0");
  c.engine.ref_channel = static_cast<std::size_t>(ref);
  c.engine.epsilon_init = get_or(j, "epsilon_init", c.engine.epsilon_init);
  c.engine.oracle.floor = get_or(j, "oracle_floor", c.engine.oracle.floor);
  c.engine.oracle.max_magnitude = get_or(j, "oracle_clip", c.engine.oracle.max_magnitude);
  c.mask_provider = get_or<std::string>(j, "mask_provider", "neural");
  c.mask_file = get_or<std::string>(j, "mask_file", "");
  if (c.mask_provider != "neural" && c.mask_provider != "oracle" && c.mask_provider != "identity" &&
      c.mask_provider != "file") {
    throw Error(ErrorCode::InvalidConfig, "mask_provider must be neural, oracle, identity or file");
  }
  if (c.mask_provider == "file" && c.mask_file.empty()) {
    throw Error(ErrorCode::InvalidConfig, "mask_provider 'file' needs a mask_file entry");
  }
  return c;
}

int cmd_enhance(const std::string& input, const std::string& weights_path, const std::string& config_path,
                const std::string& output, const std::string& reference) {
  CliConfig cfg = parse_config(config_path);
  const AudioBuffer mix = read_wav(input);
  if (mix.sample_rate != cfg.engine.stft.sample_rate) {
    throw Error(ErrorCode::UnsupportedFormat, "input sample rate " + std::to_string(mix.sample_rate) + " Hz; expected " +
                                                  std::to_string(cfg.engine.stft.sample_rate) + " Hz");
  }

  const TensorMap tensors = load_npw1_file(weights_path);
  std::unique_ptr<MaskProvider> provider;
  if (cfg.mask_provider == "neural") {
    auto w = std::make_shared<const ModelWeights>(load_weights(tensors));
    if (w->hparams.channels != mix.channels) {
      throw Error(ErrorCode::ChannelMismatch, "model expects " + std::to_string(w->hparams.channels) +
                                                  " channels, input has " + std::to_string(mix.channels));
    }
    cfg.engine.controls.vectors = w->controls;
    provider = std::make_unique<NeuralMaskProvider>(w, cfg.engine.ref_channel);
  } else {
    cfg.engine.controls.vectors = load_control_vectors(tensors);
    if (cfg.mask_provider == "oracle") {
      provider = std::make_unique<OracleMaskProvider>(cfg.engine.ref_channel, cfg.engine.oracle);
    } else if (cfg.mask_provider == "file") {
      provider = std::make_unique<FileMaskProvider>(load_npw1_file(cfg.mask_file), cfg.engine.ref_channel);
    } else {
      provider = std::make_unique<IdentityMaskProvider>();
    }
  }

  Engine engine(cfg.engine, mix.channels, std::move(provider));
  std::vector<double> out;
  const PlanarView mix_view = mix.view();
  if (engine.needs_reference()) {
    if (reference.empty()) throw Error(ErrorCode::InvalidConfig, "oracle mask provider needs --reference");
    const AudioBuffer clean = read_wav(reference);
    if (clean.channels != mix.channels || clean.frames != mix.frames) {
      throw Error(ErrorCode::LengthMismatch, "reference must have the same channels and length as the input");
    }
    const PlanarView clean_view = clean.view();
    out = enhance_buffer(engine, mix_view, &clean_view);
  } else {
    out = enhance_buffer(engine, mix_view);
  }

  AudioBuffer result(mix.sample_rate, 1, out.size());
  result.samples = std::move(out);
  write_wav(output, result);
  return 0;
}

int cmd_metrics(const std::vector<std::string>& references, const std::vector<std::string>& estimates,
                std::size_t channel) {
  if (references.size() != estimates.size()) {
    throw Error(ErrorCode::InvalidArgument, "need one --estimate per --reference");
  }
  MetricsReport report;
  json files = json::array();
  for (std::size_t i = 0; i < references.size(); ++i) {
    const AudioBuffer ref = read_wav(references[i]);
    const AudioBuffer est = read_wav(estimates[i]);
    if (channel >= ref.channels) throw Error(ErrorCode::InvalidArgument, "reference channel out of range");
    const MetricsEntry m = evaluate(ref.channel(channel), est.channel(0));
    report.files.push_back(m);
    files.push_back({{"reference", references[i]}, {"estimate", estimates[i]}, {"snr_db", m.snr_db},
                     {"si_sdr_db", m.si_sdr_db}});
  }
  const MetricsEntry mean = report.mean();
  json out = {{"files", files}, {"mean", {{"snr_db", mean.snr_db}, {"si_sdr_db", mean.si_sdr_db}}}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_report(const std::string& weights_path) {
  const ModelWeights w = load_weights(load_npw1_file(weights_path));
  const ComplexityReport r = complexity_report(w);
  json items = json::array();
  for (const auto& i : r.items) {
    items.push_back({{"name", i.name},
                     {"params", i.params},
                     {"real_macs_per_frame", i.real_macs_per_frame},
                     {"complex_ops_per_frame", i.complex_ops_per_frame}});
  }
  const auto& hp = w.hparams;
  json out = {{"config",
               {{"channels", hp.channels},
                {"bins", hp.bins},
                {"hidden", hp.hidden},
                {"splits", hp.splits},
                {"spatial_layers", hp.spatial_layers},
                {"temporal_layers", hp.temporal_layers}}},
              {"frame_rate_hz", r.frame_rate},
              {"params", r.total_params()},
              {"mmacs", r.mmacs()},
              {"real_arith_mmacs", r.real_arith_mmacs()},
              {"items", items}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_dump_params(const std::string& weights_path, const std::string& out) {
  dump_params(load_control_vectors(load_npw1_file(weights_path)), out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multichannel speech enhancement with a neural-controlled parameterized Wiener filter"};
  app.require_subcommand(1);

  std::string input, weights, config, output, reference;
  auto* enhance = app.add_subcommand("enhance", "Enhance a multichannel WAV file to a mono WAV file");
  enhance->add_option("--input", input, "Multichannel mixture (WAV)")->required();
  enhance->add_option("--weights", weights, "Weight container (NPW1)")->required();
  enhance->add_option("--config", config, "Engine configuration (JSON)")->required();
  enhance->add_option("--output", output, "Enhanced mono output (32-bit float WAV)")->required();
  enhance->add_option("--reference", reference, "Clean multichannel reference for the oracle mask provider");

  std::vector<std::string> refs, ests;
  std::size_t channel = 0;
  auto* metrics = app.add_subcommand("metrics", "SNR and SI-SDR of estimates against references");
  metrics->add_option("--reference", refs, "Clean reference WAV (repeatable)")->required();
  metrics->add_option("--estimate", ests, "Estimate WAV (repeatable, paired in order)")->required();
  metrics->add_option("--channel", channel, "Reference channel to score against")->capture_default_str();

  std::string report_weights;
  auto* report = app.add_subcommand("report", "Parameter and MAC budget of a model");
  report->add_option("--weights", report_weights, "Weight container (NPW1)")->required();

  std::string dump_weights, dump_out;
  auto* dump = app.add_subcommand("dump-params", "Write the learned per-bin controls as CSV");
  dump->add_option("--weights", dump_weights, "Weight container (NPW1)")->required();
  dump->add_option("--out", dump_out, "Output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fprintf(stderr, "error: InvalidArgument: %s\n", e.what());
    return 2;
  }

  try {
    if (*enhance) return cmd_enhance(input, weights, config, output, reference);
    if (*metrics) return cmd_metrics(refs, ests, channel);
    if (*report) return cmd_report(report_weights);
    if (*dump) return cmd_dump_params(dump_weights, dump_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: Internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
