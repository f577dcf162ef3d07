// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: train, fuse, reconstruct, eval, eval-batch, gradcheck.
// Results go to stdout, diagnostics to stderr. Exit codes: 0 success,
// 1 usage error, 2 runtime error (including a failed gradient check).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sedrfuse/checkpoint.hpp"
#include "sedrfuse/dataset.hpp"
#include "sedrfuse/fusion.hpp"
#include "sedrfuse/gradcheck.hpp"
#include "sedrfuse/image_io.hpp"
#include "sedrfuse/metrics.hpp"
#include "sedrfuse/network.hpp"
#include "sedrfuse/train.hpp"

namespace fs = std::filesystem;
using namespace sedrfuse;

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;
constexpr double kGradTolerance = 1e-4;

struct TrainArgs {
  std::string data, val, out, loss_csv, optimizer = "adam";
  std::size_t epochs = 50, batch = 2, res_blocks = 1, base_channels = 64, size = 256;
  std::size_t log_every = 100;
  double lr = 1e-4;
  std::uint64_t seed = 0;
};

struct FuseArgs {
  std::string model, ir, vis, out, dump;
};

struct ReconstructArgs {
  std::string model, in, out;
};

struct EvalArgs {
  std::string fused;
  std::vector<std::string> src;
  std::string manifest;
  bool json = false, csv = false;
};

struct GradArgs {
  std::size_t size = 16, samples = 16, res_blocks = 1, base_channels = 64;
  std::uint64_t seed = 0;
};

fs::path best_path(const fs::path& out) {
  fs::path p = out;
  p.replace_filename(out.stem().string() + ".best" + out.extension().string());
  return p;
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

int run_train(const TrainArgs& a) {
  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.learning_rate = a.lr;
  cfg.residual_blocks = a.res_blocks;
  cfg.base_channels = a.base_channels;
  cfg.seed = a.seed;
  cfg.log_every = a.log_every;
  cfg.optimizer = a.optimizer == "sgd" ? OptimizerKind::sgd : OptimizerKind::adam;

  const io::Dataset data = io::ingest_dataset(a.data, a.size, a.size, log_line);
  log_line("loaded " + std::to_string(data.images.size()) + " training images, manifest " +
           data.manifest_hash());
  io::Dataset val;
  if (!a.val.empty()) {
    val = io::ingest_dataset(a.val, a.size, a.size, log_line);
    log_line("loaded " + std::to_string(val.images.size()) + " validation images");
  }

  TrainHooks hooks;
  hooks.on_report = [](const TrainStepReport& r) {
    std::ostringstream os;
    os << "iter " << r.iteration << " total " << r.total << " pixel " << r.pixel << " ssim "
       << r.ssim;
    log_line(os.str());
  };
  hooks.on_checkpoint = [&a](const NetworkWeights<float>& w, std::size_t epoch, bool best) {
    const fs::path p = best ? best_path(a.out) : fs::path(a.out);
    io::save_checkpoint(w, p);
    log_line("epoch " + std::to_string(epoch) + ": wrote " + p.string());
  };
  hooks.on_validation = [](std::size_t epoch, double loss) {
    std::ostringstream os;
    os << "epoch " << epoch << " validation loss " << loss;
    log_line(os.str());
  };

  const TrainResult result = train(data.images, cfg, val.images, hooks);
  if (!a.loss_csv.empty()) {
    std::ofstream csv(a.loss_csv);
    if (!csv) throw std::runtime_error(a.loss_csv + ": cannot open for writing");
    csv.precision(10);
    csv << "iteration,total,pixel,ssim\n";
    for (const auto& r : result.history) {
      csv << r.iteration << ',' << r.total << ',' << r.pixel << ',' << r.ssim << '\n';
    }
  }
  return 0;
}

int run_fuse(const FuseArgs& a) {
  const NetworkWeights<float> w = io::load_checkpoint(a.model);
  const GrayImage ir = io::load_image(a.ir);
  const GrayImage vis = io::load_image(a.vis);
  fusion::FusionDebug debug;
  const GrayImage fused = fusion::fuse_images(ir, vis, w, a.dump.empty() ? nullptr : &debug);
  io::save_image(fused, a.out);
  if (!a.dump.empty()) {
    const fs::path dir(a.dump);
    fs::create_directories(dir);
    io::save_image(debug.attention_ir, dir / "attention_ir.pgm");
    io::save_image(debug.attention_vis, dir / "attention_vis.pgm");
    io::save_image(debug.weight_ir, dir / "weight_ir.pgm");
    io::save_image(debug.weight_vis, dir / "weight_vis.pgm");
  }
  return 0;
}

int run_reconstruct(const ReconstructArgs& a) {
  const NetworkWeights<float> w = io::load_checkpoint(a.model);
  const GrayImage in = io::load_image(a.in);
  io::save_image(GrayImage::from_tensor(reconstruct(in.to_tensor(), w)), a.out);
  return 0;
}

void print_report(const metrics::MetricsReport& r, const EvalArgs& a) {
  if (a.json) {
    std::cout << metrics::to_json(r) << '\n';
  } else if (a.csv) {
    std::cout << metrics::to_csv(std::span(&r, 1));
  } else {
    const auto values = r.columns();
    for (std::size_t i = 0; i < metrics::kColumns.size(); ++i) {
      std::string name(metrics::kColumns[i]);
      for (char& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      std::printf("%s=%.10g\n", name.c_str(), values[i]);
    }
  }
}

int run_eval(const EvalArgs& a) {
  const GrayImage fused = io::load_image(a.fused);
  const GrayImage s1 = io::load_image(a.src[0]);
  const GrayImage s2 = io::load_image(a.src[1]);
  metrics::MetricsReport r = metrics::evaluate(fused, s1, s2);
  r.fused_id = a.fused;
  r.src_a_id = a.src[0];
  r.src_b_id = a.src[1];
  print_report(r, a);
  return 0;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  return out;
}

int run_eval_batch(const EvalArgs& a) {
  std::ifstream in(a.manifest);
  if (!in) throw std::runtime_error(a.manifest + ": cannot open manifest");
  const fs::path base = fs::path(a.manifest).parent_path();
  std::string line;
  std::vector<std::array<std::string, 3>> rows;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split_csv_line(line);
    if (fields.empty() || fields[0].empty() || fields[0][0] == '#') continue;
    if (rows.empty() && fields[0] == "fused") continue;
    if (fields.size() != 3) {
      throw std::runtime_error(a.manifest + ":" + std::to_string(lineno) +
                               ": expected 3 columns fused,src_a,src_b");
    }
    rows.push_back({fields[0], fields[1], fields[2]});
  }
  if (rows.empty()) throw std::runtime_error(a.manifest + ": no rows");

  std::vector<metrics::MetricsReport> reports;
  for (const auto& row : rows) {
    std::array<GrayImage, 3> img;
    for (int k = 0; k < 3; ++k) img[k] = io::load_image(base / row[k]);
    metrics::MetricsReport r = metrics::evaluate(img[0], img[1], img[2]);
    r.fused_id = row[0];
    r.src_a_id = row[1];
    r.src_b_id = row[2];
    reports.push_back(std::move(r));
  }
  if (a.json) {
    std::cout << metrics::to_json(reports) << '\n';
  } else {
    reports.push_back(metrics::average(reports));
    std::cout << metrics::to_csv(reports);
  }
  return 0;
}

int run_gradcheck(const GradArgs& a) {
  GradCheckOptions o;
  o.size = a.size;
  o.seed = a.seed;
  o.samples_per_param = a.samples;
  o.residual_blocks = a.res_blocks;
  o.base_channels = a.base_channels;
  const GradCheckResult r = network_grad_check(o);
  std::printf("max_relative_error=%.6e\n", r.max_relative_error);
  std::fprintf(stderr, "probed %zu parameter entries, tolerance %.0e\n", r.parameters_probed,
               kGradTolerance);
  return r.max_relative_error < kGradTolerance ? 0 : kRuntimeError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infrared/visible image fusion with a residual encoder-decoder"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train the autoencoder on a directory of images");
  train_cmd->add_option("--data", ta.data, "Training image directory")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--val", ta.val, "Validation image directory")->check(CLI::ExistingDirectory);
  train_cmd->add_option("--out", ta.out, "Checkpoint path (best validation goes to <stem>.best<ext>)")->required();
  train_cmd->add_option("--epochs", ta.epochs, "Epochs")->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", ta.batch, "Batch size")->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", ta.lr, "Learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--res-blocks", ta.res_blocks, "Residual blocks")->capture_default_str();
  train_cmd->add_option("--base-channels", ta.base_channels, "Channels of the first layer")->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--size", ta.size, "Training resolution (square, divisible by 4)")->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", ta.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--loss-csv", ta.loss_csv, "Write iteration,total,pixel,ssim here");
  train_cmd->add_option("--log-every", ta.log_every, "Report interval in iterations")->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--optimizer", ta.optimizer, "adam or sgd")->capture_default_str()->check(CLI::IsMember({"adam", "sgd"}));

  FuseArgs fa;
  auto* fuse_cmd = app.add_subcommand("fuse", "Fuse an infrared/visible pair");
  fuse_cmd->add_option("--model", fa.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  fuse_cmd->add_option("--ir", fa.ir, "Infrared image")->required()->check(CLI::ExistingFile);
  fuse_cmd->add_option("--vis", fa.vis, "Visible image")->required()->check(CLI::ExistingFile);
  fuse_cmd->add_option("--out", fa.out, "Output image (.pgm or .png)")->required();
  fuse_cmd->add_option("--dump-attention", fa.dump, "Directory for attention and weight maps");

  ReconstructArgs ra;
  auto* rec_cmd = app.add_subcommand("reconstruct", "Run one image through the autoencoder");
  rec_cmd->add_option("--model", ra.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  rec_cmd->add_option("--in", ra.in, "Input image")->required()->check(CLI::ExistingFile);
  rec_cmd->add_option("--out", ra.out, "Output image")->required();

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Score a fused image against its two sources");
  eval_cmd->add_option("--fused", ea.fused, "Fused image")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--src", ea.src, "Source image (give twice)")->required()->expected(2)->check(CLI::ExistingFile);
  auto* ej = eval_cmd->add_flag("--json", ea.json, "JSON output");
  eval_cmd->add_flag("--csv", ea.csv, "CSV output")->excludes(ej);

  EvalArgs ba;
  auto* batch_cmd = app.add_subcommand("eval-batch", "Score every fused,src_a,src_b row of a CSV");
  batch_cmd->add_option("--manifest", ba.manifest, "CSV; paths relative to its directory")->required()->check(CLI::ExistingFile);
  auto* bj = batch_cmd->add_flag("--json", ba.json, "JSON output");
  batch_cmd->add_flag("--csv", ba.csv, "CSV output (default)")->excludes(bj);

  GradArgs ga;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  grad_cmd->add_option("--size", ga.size, "Input side length (divisible by 4)")->capture_default_str()->check(CLI::PositiveNumber);
  grad_cmd->add_option("--seed", ga.seed, "Random seed")->capture_default_str();
  grad_cmd->add_option("--samples", ga.samples, "Entries probed per tensor, 0 = all")->capture_default_str();
  grad_cmd->add_option("--res-blocks", ga.res_blocks, "Residual blocks")->capture_default_str();
  grad_cmd->add_option("--base-channels", ga.base_channels, "Channels of the first layer")->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*train_cmd) return run_train(ta);
    if (*fuse_cmd) return run_fuse(fa);
    if (*rec_cmd) return run_reconstruct(ra);
    if (*eval_cmd) return run_eval(ea);
    if (*batch_cmd) return run_eval_batch(ba);
    if (*grad_cmd) return run_gradcheck(ga);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}
