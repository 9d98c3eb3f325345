// Command-line surface over the photostat library. One binary, one
// subcommand per operation:
//
//   simulate     draw Monte-Carlo count histograms from a source + detector
//   forward      counting distribution of a source through the channel
//   posterior    Bayes posterior over source photon number given a count
//   invert       explicit analytic channel inversion with diagnostics
//   reconstruct  chi-squared-gated maximum-entropy reconstruction
//   diagnose     channel matrix and its conditioning
//
// Every run writes exactly one manifest (<out>.manifest.json) recording the
// resolved parameters, seed, tool version, file paths, and duration.
//
// Exit codes: 0 ok, 2 input parse / missing file, 3 schema violation,
// 4 invariant violation.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "photostat/photostat.hpp"

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct ManifestInfo {
  std::string command;
  json parameters = json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  Clock::time_point started = Clock::now();
};

void write_manifest(const ManifestInfo& info, const std::string& out_path) {
  const double seconds =
      std::chrono::duration<double>(Clock::now() - info.started).count();
  const json manifest{{"command", info.command},
                      {"parameters", info.parameters},
                      {"seed", info.seed},
                      {"version", photostat::kVersion},
                      {"inputs", info.inputs},
                      {"outputs", info.outputs},
                      {"duration_seconds", seconds}};
  photostat::write_json_file(out_path + ".manifest.json", manifest);
}

// Detector comes from a JSON file, flag overrides, or flags alone.
struct DetectorArgs {
  std::string file;
  double efficiency = -1.0;
  double dark_mean = -1.0;
  bool efficiency_set = false;
  bool dark_mean_set = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--detector", file, "detector JSON file {efficiency, dark_mean}");
    cmd->add_option("--efficiency", efficiency, "quantum efficiency (overrides file)");
    cmd->add_option("--dark-mean", dark_mean, "mean dark counts per window (overrides file)");
  }

  photostat::DetectorModel resolve(CLI::App* cmd, ManifestInfo& manifest) const {
    photostat::DetectorModel det;
    bool have_efficiency = false;
    if (!file.empty()) {
      det = photostat::detector_from_json(photostat::load_json_file(file));
      manifest.inputs.push_back(file);
      have_efficiency = true;
    }
    if (cmd->count("--efficiency") > 0) {
      det.efficiency = efficiency;
      have_efficiency = true;
    }
    if (cmd->count("--dark-mean") > 0) det.dark_mean = dark_mean;
    if (!have_efficiency)
      throw CLI::RequiredError("--detector or --efficiency");
    photostat::validate(det);
    manifest.parameters["efficiency"] = det.efficiency;
    manifest.parameters["dark_mean"] = det.dark_mean;
    return det;
  }
};

void print_table(const photostat::PhotonNumberDistribution& dist, const char* label) {
  std::printf("# %s probability\n", label);
  for (std::size_t i = 0; i < dist.probs.size(); ++i)
    std::printf("%zu %.17g\n", i, dist.probs[i]);
}

void setup_simulate(CLI::App& app) {
  auto* cmd = app.add_subcommand("simulate", "sample count histograms from a source");
  auto source_file = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  auto detector = std::make_shared<DetectorArgs>();
  auto trials = std::make_shared<std::uint64_t>(10000);
  auto seed = std::make_shared<std::uint64_t>(1);
  auto workers = std::make_shared<unsigned>(1);
  cmd->add_option("--source", *source_file, "source spec JSON")->required();
  detector->attach(cmd);
  cmd->add_option("--trials", *trials, "number of trials");
  cmd->add_option("--seed", *seed, "random seed");
  cmd->add_option("--workers", *workers, "worker threads (result is identical for any count)");
  cmd->add_option("--out", *out_path, "output histogram JSON")->required();
  cmd->callback([=]() {
    ManifestInfo manifest;
    manifest.command = "simulate";
    manifest.seed = *seed;
    manifest.inputs.push_back(*source_file);
    const auto source =
        photostat::source_from_json(photostat::load_json_file(*source_file));
    photostat::validate_distribution(source, 1e-6);
    photostat::DetectorModel det = detector->resolve(cmd, manifest);
    manifest.parameters["source"] = *source_file;
    manifest.parameters["trials"] = *trials;
    manifest.parameters["seed"] = *seed;
    manifest.parameters["workers"] = *workers;
    manifest.parameters["out"] = *out_path;
    const photostat::SimulationSpec spec{source, det, *trials, *seed};
    const auto hist = photostat::simulate(spec, *workers);
    photostat::write_json_file(*out_path, photostat::to_json(hist));
    manifest.outputs.push_back(*out_path);
    write_manifest(manifest, *out_path);
  });
}

void setup_forward(CLI::App& app) {
  auto* cmd = app.add_subcommand("forward", "counting distribution of a source");
  auto source_file = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  auto detector = std::make_shared<DetectorArgs>();
  auto truncation = std::make_shared<int>(-1);
  cmd->add_option("--source", *source_file, "source spec JSON")->required();
  detector->attach(cmd);
  cmd->add_option("--truncation", *truncation, "channel truncation (default: source truncation)");
  cmd->add_option("--out", *out_path, "output distribution JSON")->required();
  cmd->callback([=]() {
    ManifestInfo manifest;
    manifest.command = "forward";
    manifest.inputs.push_back(*source_file);
    auto source = photostat::source_from_json(photostat::load_json_file(*source_file));
    photostat::validate_distribution(source, 1e-6);
    photostat::DetectorModel det = detector->resolve(cmd, manifest);
    int n = *truncation >= 0 ? *truncation : source.truncation();
    if (n < source.truncation())
      throw std::invalid_argument("truncation must not cut off the source support");
    source.probs.resize(static_cast<std::size_t>(n) + 1, 0.0);
    manifest.parameters["source"] = *source_file;
    manifest.parameters["truncation"] = n;
    manifest.parameters["out"] = *out_path;
    const auto channel = det.dark_mean > 0.0 ? photostat::composed_matrix(det, n)
                                             : photostat::loss_matrix(det, n);
    const auto counting = photostat::apply_forward(channel, source);
    photostat::write_json_file(*out_path, photostat::to_json(counting));
    print_table(counting, "k");
    manifest.outputs.push_back(*out_path);
    write_manifest(manifest, *out_path);
  });
}

void setup_posterior(CLI::App& app) {
  auto* cmd = app.add_subcommand("posterior", "Bayes posterior over source photon number");
  auto source_file = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  auto detector = std::make_shared<DetectorArgs>();
  auto truncation = std::make_shared<int>(-1);
  auto detected = std::make_shared<int>(0);
  cmd->add_option("--source", *source_file, "prior source spec JSON")->required();
  detector->attach(cmd);
  cmd->add_option("-k,--detected", *detected, "detected photon count")->required();
  cmd->add_option("--truncation", *truncation, "channel truncation (default: prior truncation)");
  cmd->add_option("--out", *out_path, "output JSON")->required();
  cmd->callback([=]() {
    ManifestInfo manifest;
    manifest.command = "posterior";
    manifest.inputs.push_back(*source_file);
    auto prior = photostat::source_from_json(photostat::load_json_file(*source_file));
    photostat::validate_distribution(prior, 1e-6);
    photostat::DetectorModel det = detector->resolve(cmd, manifest);
    int n = *truncation >= 0 ? *truncation : prior.truncation();
    if (n < prior.truncation())
      throw std::invalid_argument("truncation must not cut off the prior support");
    prior.probs.resize(static_cast<std::size_t>(n) + 1, 0.0);
    manifest.parameters["source"] = *source_file;
    manifest.parameters["k"] = *detected;
    manifest.parameters["truncation"] = n;
    manifest.parameters["out"] = *out_path;
    const auto channel = det.dark_mean > 0.0 ? photostat::composed_matrix(det, n)
                                             : photostat::loss_matrix(det, n);
    const auto post = photostat::posterior(prior, channel, *detected);
    const json payload{{"posterior", photostat::to_json(post)},
                       {"prior", photostat::to_json(prior)},
                       {"detector", photostat::to_json(det)},
                       {"k", *detected}};
    photostat::write_json_file(*out_path, payload);
    manifest.outputs.push_back(*out_path);
    write_manifest(manifest, *out_path);
  });
}

photostat::PhotonNumberDistribution observed_from_json(const json& j) {
  if (j.is_object() && j.contains("counts"))
    return photostat::empirical_pmf(photostat::histogram_from_json(j));
  return photostat::distribution_from_json(j);
}

void setup_invert(CLI::App& app) {
  auto* cmd = app.add_subcommand("invert", "explicit analytic channel inversion");
  auto input_file = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  auto detector = std::make_shared<DetectorArgs>();
  auto truncation = std::make_shared<int>(-1);
  cmd->add_option("--input", *input_file, "observed histogram or pmf JSON")->required();
  detector->attach(cmd);
  cmd->add_option("--truncation", *truncation, "inversion truncation (default: input length - 1)");
  cmd->add_option("--out", *out_path, "output JSON")->required();
  cmd->callback([=]() {
    ManifestInfo manifest;
    manifest.command = "invert";
    manifest.inputs.push_back(*input_file);
    auto observed = observed_from_json(photostat::load_json_file(*input_file));
    photostat::DetectorModel det = detector->resolve(cmd, manifest);
    int n = *truncation >= 0 ? *truncation : observed.truncation();
    if (observed.truncation() < n)
      observed.probs.resize(static_cast<std::size_t>(n) + 1, 0.0);
    manifest.parameters["input"] = *input_file;
    manifest.parameters["truncation"] = n;
    manifest.parameters["out"] = *out_path;
    const auto [candidate, diagnostics] = photostat::invert_counts(observed, det, n);
    if (!diagnostics.physical)
      std::fprintf(stderr,
                   "WARNING: inversion is unphysical (min entry %.6g); the linear "
                   "inverse amplifies noise at low efficiency -- consider the "
                   "'reconstruct' subcommand\n",
                   diagnostics.min_entry);
    const json payload{{"candidate", photostat::to_json(candidate)},
                       {"diagnostics", photostat::to_json(diagnostics)}};
    photostat::write_json_file(*out_path, payload);
    manifest.outputs.push_back(*out_path);
    write_manifest(manifest, *out_path);
  });
}

void setup_reconstruct(CLI::App& app) {
  auto* cmd = app.add_subcommand("reconstruct",
                                 "chi-squared-gated maximum-entropy reconstruction");
  auto input_file = std::make_shared<std::string>();
  auto config_file = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  auto detector = std::make_shared<DetectorArgs>();
  auto truncation = std::make_shared<int>(-1);
  auto seed = std::make_shared<std::uint64_t>(0);
  auto workers = std::make_shared<unsigned>(1);
  cmd->add_option("--input", *input_file, "observed histogram JSON")->required();
  detector->attach(cmd);
  cmd->add_option("--config", *config_file, "MaxEnt config JSON (all fields optional)");
  cmd->add_option("--truncation", *truncation, "source truncation (overrides config)");
  cmd->add_option("--seed", *seed, "random seed (overrides config)");
  cmd->add_option("--workers", *workers, "worker threads (result is identical for any count)");
  cmd->add_option("--out", *out_path, "output JSON")->required();
  cmd->callback([=]() {
    ManifestInfo manifest;
    manifest.command = "reconstruct";
    manifest.inputs.push_back(*input_file);
    const auto hist =
        photostat::histogram_from_json(photostat::load_json_file(*input_file));
    photostat::DetectorModel det = detector->resolve(cmd, manifest);
    photostat::MaxEntConfig config;
    if (!config_file->empty()) {
      config = photostat::config_from_json(photostat::load_json_file(*config_file));
      manifest.inputs.push_back(*config_file);
    }
    if (cmd->count("--truncation") > 0) config.truncation = *truncation;
    else config.truncation = std::max(config.truncation,
                                      static_cast<int>(hist.counts.size()) - 1);
    if (cmd->count("--seed") > 0) config.seed = *seed;
    manifest.seed = config.seed;
    manifest.parameters["input"] = *input_file;
    manifest.parameters["config"] = photostat::to_json(config);
    manifest.parameters["workers"] = *workers;
    manifest.parameters["out"] = *out_path;
    const auto result = photostat::reconstruct_maxent(hist, det, config, *workers);
    if (!result.converged)
      std::fprintf(stderr,
                   "WARNING: no candidate passed the chi-squared gate "
                   "(best chi2 %.6g vs threshold %.6g); reporting the best fit\n",
                   result.chi2, result.chi2_threshold);
    photostat::write_json_file(*out_path, photostat::to_json(result));
    print_table(result.distribution, "n");
    manifest.outputs.push_back(*out_path);
    write_manifest(manifest, *out_path);
  });
}

void setup_diagnose(CLI::App& app) {
  auto* cmd = app.add_subcommand("diagnose", "channel matrix and conditioning");
  auto out_path = std::make_shared<std::string>();
  auto detector = std::make_shared<DetectorArgs>();
  auto truncation = std::make_shared<int>(20);
  detector->attach(cmd);
  cmd->add_option("--truncation", *truncation, "channel truncation");
  cmd->add_option("--out", *out_path, "output JSON")->required();
  cmd->callback([=]() {
    ManifestInfo manifest;
    manifest.command = "diagnose";
    photostat::DetectorModel det = detector->resolve(cmd, manifest);
    manifest.parameters["truncation"] = *truncation;
    manifest.parameters["out"] = *out_path;
    const auto channel = det.dark_mean > 0.0
                             ? photostat::composed_matrix(det, *truncation)
                             : photostat::loss_matrix(det, *truncation);
    json payload = photostat::to_json(channel);
    payload["condition_estimate"] = photostat::condition_estimate(det, *truncation);
    photostat::write_json_file(*out_path, payload);
    manifest.outputs.push_back(*out_path);
    write_manifest(manifest, *out_path);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"photon counting statistics: forward models, Bayes posteriors, "
               "channel inversion, and maximum-entropy reconstruction"};
  app.require_subcommand(1);
  setup_simulate(app);
  setup_forward(app);
  setup_posterior(app);
  setup_invert(app);
  setup_reconstruct(app);
  setup_diagnose(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const photostat::io_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::parse_error& e) {
    std::fprintf(stderr, "error: JSON parse failure: %s\n", e.what());
    return 2;
  } catch (const photostat::schema_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
