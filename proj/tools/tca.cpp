// tca: experiment driver for trained compound activations.
//
//   tca pdf-fit   --input samples.txt | --bimodal 2000
//   tca train-rbm --images ... --labels ...
//   tca train-dbn ...
//   tca train-aec ...
//   tca eval      --model out/model.tcam [--split train|holdout]
//
// Every option may also come from a key=value file given with --config;
// command-line flags win over the file, the file wins over the defaults.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tca/autoenc.hpp"
#include "tca/config.hpp"
#include "tca/data.hpp"
#include "tca/dbn.hpp"
#include "tca/pdf_estimation.hpp"
#include "tca/persist.hpp"
#include "tca/rbm.hpp"
#include "tca/stats.hpp"

namespace fs = std::filesystem;
using namespace tca;

namespace {

struct Options {
  // data
  std::string images = "data/mnist389-images-idx3-ubyte";
  std::string labels = "data/mnist389-labels-idx1-ubyte";
  std::vector<int> classes{3, 8, 9};
  std::size_t per_class = 500;
  std::size_t holdout_per_class = 500;
  double dither_mean = 0.05;  // 0 disables dithering

  // model
  std::vector<int> hidden{32};
  int top = 256;
  int mixtures = 3;
  std::string base = "ted";

  // training
  int cd_k = 1;
  int top_cd_k = 3;
  double lr = 1.0;
  double tca_lr = 1.0;
  double lambda_fe = 1.0;
  std::size_t batch = 20;
  int epochs_a = 100;
  int epochs_b = 20;
  int epochs_c = 100;
  int epochs_top = 100;
  int epochs_updown = 60;
  double dbn_lr = 0.1;      // top RBM and up-down learning rate
  double dbn_tca_lr = 0.1;  // up-down TCA learning rate
  int tca_enable_epoch = 31;  // up-down epoch at which TCAs start training
  bool freeze_tca = false;
  bool plateau = false;
  double init_spread = 0.1;
  double weight_sd = 0.01;
  std::uint64_t seed = 1;

  // auto-encoder
  std::vector<int> code{32, 8};
  std::string optimizer = "adam";
  double ae_lr = 0.01;
  double ae_gain = 1.0;
  int ae_max_epochs = 1500;

  // pdf-fit
  std::string input;
  std::size_t bimodal = 0;
  std::string target = "uniform";
  double pdf_lr = 0.05;
  int pdf_epochs = 500;

  // output / eval
  std::string out_dir = "out";
  int dump_every = 0;  // reconstruction PGM every R epochs, 0 = never
  std::string model;
  std::string split = "train";
};

// Everything the commands need after parsing.
struct Run {
  Options o;
  std::string config_echo;  // resolved key=value lines
};

void add_options(CLI::App& app, Options& o) {
  app.add_option("--images", o.images, "IDX image file");
  app.add_option("--labels", o.labels, "IDX label file");
  app.add_option("--classes", o.classes, "class labels to keep")->delimiter(',');
  app.add_option("--per-class", o.per_class, "training samples per class (file order)");
  app.add_option("--holdout-per-class", o.holdout_per_class, "held-out samples per class, taken after the training ones");
  app.add_option("--dither-mean", o.dither_mean, "mean of the exponential pixel dither (0: off)")
      ->check(CLI::NonNegativeNumber);

  app.add_option("--hidden", o.hidden, "hidden units per stacked layer")->delimiter(',');
  app.add_option("--top", o.top, "top (classifier) RBM hidden units")->check(CLI::PositiveNumber);
  app.add_option("--mixtures", o.mixtures, "TCA components M")->check(CLI::PositiveNumber);
  app.add_option("--base", o.base, "base activation")->check(CLI::IsMember({"ted", "sigmoid", "linear"}));

  app.add_option("--cd-k", o.cd_k, "Gibbs steps for layer CD")->check(CLI::PositiveNumber);
  app.add_option("--top-cd-k", o.top_cd_k, "Gibbs steps for the top RBM")->check(CLI::PositiveNumber);
  app.add_option("--lr", o.lr, "weight/bias learning rate");
  app.add_option("--tca-lr", o.tca_lr, "TCA learning rate");
  app.add_option("--lambda-fe", o.lambda_fe, "weight of the free-energy cross-entropy term");
  app.add_option("--batch", o.batch, "mini-batch size")->check(CLI::PositiveNumber);
  app.add_option("--epochs-a", o.epochs_a, "phase (a) epochs: base activation")->check(CLI::NonNegativeNumber);
  app.add_option("--epochs-b", o.epochs_b, "phase (b) epochs: TCA present, frozen")->check(CLI::NonNegativeNumber);
  app.add_option("--epochs-c", o.epochs_c, "phase (c) epochs: TCA trainable")->check(CLI::NonNegativeNumber);
  app.add_option("--dbn-lr", o.dbn_lr, "top RBM and up-down weight learning rate");
  app.add_option("--dbn-tca-lr", o.dbn_tca_lr, "up-down TCA learning rate");
  app.add_option("--epochs-top", o.epochs_top, "top RBM epochs")->check(CLI::NonNegativeNumber);
  app.add_option("--epochs-updown", o.epochs_updown, "up-down fine-tuning epochs")->check(CLI::NonNegativeNumber);
  app.add_option("--tca-enable-epoch", o.tca_enable_epoch, "up-down epoch that unfreezes the TCAs (-1: never)");
  app.add_flag("--freeze-tca", o.freeze_tca, "never train TCA parameters");
  app.add_flag("--plateau", o.plateau, "end phases (a)/(b) early once the MSE plateaus");
  app.add_option("--init-spread", o.init_spread, "TCA bias init range");
  app.add_option("--weight-sd", o.weight_sd, "RBM weight init standard deviation");
  app.add_option("--seed", o.seed, "random seed");

  app.add_option("--code", o.code, "encoder widths")->delimiter(',');
  app.add_option("--optimizer", o.optimizer, "auto-encoder optimizer")->check(CLI::IsMember({"adam", "sgd"}));
  app.add_option("--ae-lr", o.ae_lr, "auto-encoder learning rate");
  app.add_option("--ae-gain", o.ae_gain, "auto-encoder weight init gain");
  app.add_option("--ae-max-epochs", o.ae_max_epochs, "epoch cap per auto-encoder phase")->check(CLI::PositiveNumber);

  app.add_option("--input", o.input, "sample file, one value per line");
  app.add_option("--bimodal", o.bimodal, "use n samples of the bimodal benchmark instead of --input");
  app.add_option("--target", o.target, "target law")->check(CLI::IsMember({"uniform", "gaussian"}));
  app.add_option("--pdf-lr", o.pdf_lr, "initial ascent step");
  app.add_option("--pdf-epochs", o.pdf_epochs, "ascent epoch cap");

  app.add_option("--out-dir", o.out_dir, "output directory");
  app.add_option("--dump-every", o.dump_every, "write reconstruction PGMs every R epochs (0: never)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--model", o.model, "model file for eval");
  app.add_option("--split", o.split, "dataset split for eval")->check(CLI::IsMember({"train", "holdout"}));
}

TrainConfig train_config(const Options& o) {
  TrainConfig c;
  c.lr = o.lr;
  c.tca_lr = o.tca_lr;
  c.cd_k = o.cd_k;
  c.batch = o.batch;
  c.epochs_a = o.epochs_a;
  c.epochs_b = o.epochs_b;
  c.epochs_c = o.epochs_c;
  c.freeze_tca = o.freeze_tca;
  c.seed = o.seed;
  c.lambda_fe = o.lambda_fe;
  c.init_spread = o.init_spread;
  c.weight_sd = o.weight_sd;
  return c;
}

struct Splits {
  data::Dataset train, holdout;
};

// Training split then held-out split, dithered in that order from the seed
// stream so every command sees identical data for identical flags.
Splits load_splits(const Options& o, rng_t& rng) {
  const auto full = data::load_idx(o.images, o.labels);
  Splits s{data::subset(full, o.classes, o.per_class), data::holdout(full, o.classes, o.per_class, o.holdout_per_class)};
  if (o.dither_mean > 0.0) {
    s.train = data::dither(s.train, o.dither_mean, rng);
    if (s.holdout.size() > 0) s.holdout = data::dither(s.holdout, o.dither_mean, rng);
  }
  return s;
}

fs::path out_path(const Options& o, const std::string& name) {
  fs::create_directories(o.out_dir);
  return fs::path(o.out_dir) / name;
}

class MetricsCsv {
 public:
  MetricsCsv(const fs::path& path, const std::string& echo) : out_(path) {
    if (!out_) throw io_error("cannot write '" + path.string() + "'");
    std::istringstream lines(echo);
    for (std::string line; std::getline(lines, line);)
      if (!line.empty()) out_ << "# " << line << '\n';
    out_ << "epoch,phase,mse,cond_ll,val_err\n";
    out_ << std::setprecision(10);
  }

  void row(int epoch, char phase, double mse, double cond_ll, double val_err) {
    out_ << epoch << ',' << phase << ',' << mse << ',' << cond_ll << ',' << val_err << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

int side_of(Eigen::Index dim) {
  const auto s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim))));
  return static_cast<Eigen::Index>(s) * s == dim ? s : 0;
}

void dump_rbm_recon(const Options& o, const rbm::RbmModel& m, const data::Dataset& ds, int epoch) {
  const int side = side_of(ds.dim());
  if (o.dump_every <= 0 || side == 0 || ds.size() == 0 || epoch % o.dump_every != 0) return;
  const Matrix x = ds.X.topRows(1);
  const Matrix recon = base_eval(m.vis, rbm::backward_field(m, rbm::hidden_mean(m, x)));
  char name[64];
  std::snprintf(name, sizeof name, "recon_e%04d.pgm", epoch);
  data::write_pgm(out_path(o, name).string(), recon.row(0), side, side);
}

void write_input_pgm(const Options& o, const data::Dataset& ds) {
  const int side = side_of(ds.dim());
  if (o.dump_every > 0 && side > 0 && ds.size() > 0)
    data::write_pgm(out_path(o, "input.pgm").string(), ds.X.row(0), side, side);
}

int cmd_pdf_fit(const Run& run) {
  const Options& o = run.o;
  rng_t rng(o.seed);
  std::vector<double> x;
  if (o.bimodal > 0)
    x = pdf::bimodal_benchmark(o.bimodal, rng);
  else if (!o.input.empty())
    x = pdf::read_samples(o.input);
  else
    throw invalid_argument("pdf-fit needs --input or --bimodal");

  const BaseKind base = parse_base_kind(o.base);
  const auto target = pdf::parse_target(o.target);
  TrainConfig cfg = train_config(o);
  cfg.lr = o.pdf_lr;
  cfg.epochs = o.pdf_epochs;

  const double ks_before = pdf::transformed_ks(TcaParams::reduced(base, 1, o.mixtures), target, x);
  const auto fit = pdf::fit_univariate(x, base, o.mixtures, target, cfg);
  const double ks_after = pdf::transformed_ks(fit.params, target, x);

  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double pad = 0.1 * (*hi - *lo);
  pdf::write_fit_csv(out_path(o, "pdf_fit.csv").string(), fit.params, target, *lo - pad, *hi + pad, 401);
  pdf::write_samples(out_path(o, "transformed.txt").string(), pdf::demodalize(fit.params, x));
  io::save_model(out_path(o, "model.tcam").string(), fit.params);

  std::cout << std::setprecision(6) << "samples " << x.size() << "\n"
            << "epochs " << fit.trace.size() - 1 << "\n"
            << "loglik " << fit.trace.back() << "\n"
            << "ks_untrained " << ks_before << "\n"
            << "ks_fitted " << ks_after << "\n";
  return 0;
}

int cmd_train_rbm(const Run& run) {
  const Options& o = run.o;
  rng_t rng(o.seed);
  const auto splits = load_splits(o, rng);
  const auto cfg = train_config(o);
  if (o.hidden.size() != 1 || o.hidden[0] < 1) throw invalid_argument("train-rbm needs a single positive --hidden");

  const BaseKind base = parse_base_kind(o.base);
  auto m = rbm::init_rbm(splits.train.X, o.hidden[0], base, base, 1, cfg.weight_sd, rng);
  rbm::PhaseOptions popt;
  popt.mixtures = o.mixtures;
  popt.plateau_stop = o.plateau;

  MetricsCsv csv(out_path(o, "metrics.csv"), run.config_echo);
  write_input_pgm(o, splits.train);
  std::cout << "epoch phase mse cond_ll\n" << std::setprecision(6);
  m = rbm::train_phases(m, splits.train.X, cfg, popt, rng, [&](const rbm::EpochRecord& r, const rbm::RbmModel& cur) {
    csv.row(r.epoch, r.phase, r.mse, r.cond_ll, std::nan(""));
    dump_rbm_recon(o, cur, splits.train, r.epoch);
    std::cout << r.epoch << ' ' << r.phase << ' ' << r.mse << ' ' << r.cond_ll << '\n';
  });
  io::save_model(out_path(o, "model.tcam").string(), m);
  return 0;
}

int cmd_train_dbn(const Run& run) {
  const Options& o = run.o;
  rng_t rng(o.seed);
  const auto splits = load_splits(o, rng);
  const auto cfg = train_config(o);
  const BaseKind base = parse_base_kind(o.base);
  std::vector<Eigen::Index> hidden;
  for (int h : o.hidden) {
    if (h < 1) throw invalid_argument("--hidden entries must be positive");
    hidden.push_back(h);
  }
  auto d = dbn::make_dbn(splits.train, hidden, o.top, base, base, o.mixtures, cfg.weight_sd, rng, o.init_spread);

  MetricsCsv csv(out_path(o, "metrics.csv"), run.config_echo);
  std::cout << "epoch phase mse cond_ll val_err\n" << std::setprecision(6);
  int epoch = 0;
  auto emit = [&](char phase, double mse, double ll, double val) {
    csv.row(epoch, phase, mse, ll, val);
    std::cout << epoch << ' ' << phase << ' ' << mse << ' ' << ll << ' ' << val << '\n';
  };

  // TCAs stay frozen until the up-down stage enables them, so the layerwise
  // stage only runs phases (a) and (b)
  TrainConfig layer_cfg = cfg;
  layer_cfg.freeze_tca = true;
  layer_cfg.epochs_c = 0;
  rbm::PhaseOptions popt;
  popt.mixtures = o.mixtures;
  popt.plateau_stop = o.plateau;
  d = dbn::train_layerwise(d, splits.train.X, layer_cfg, popt, rng,
                           [&](std::size_t layer, const rbm::EpochRecord& r, const rbm::RbmModel&) {
                             if (layer == 0) {
                               epoch = r.epoch;
                               emit(r.phase, r.mse, r.cond_ll, std::nan(""));
                             }
                           });

  const data::Dataset* val = splits.holdout.size() > 0 ? &splits.holdout : nullptr;
  TrainConfig top_cfg = cfg;
  top_cfg.epochs = o.epochs_top;
  top_cfg.lr = o.dbn_lr;
  top_cfg.freeze_tca = true;
  const dbn::TopOptions topt{o.top_cd_k, rbm::Mode::stochastic, o.lambda_fe};
  const int base_epoch = epoch;
  d = dbn::top_train(d, splits.train, top_cfg, topt, val, rng, [&](const dbn::DbnEpochRecord& r) {
    epoch = base_epoch + r.epoch;
    emit('t', r.mse, r.cond_ll, r.val_err);
  });

  TrainConfig ud_cfg = cfg;
  ud_cfg.epochs = o.epochs_updown;
  ud_cfg.lr = o.dbn_lr;
  ud_cfg.tca_lr = o.dbn_tca_lr;
  const dbn::UpDownOptions uopt{topt, o.freeze_tca ? -1 : o.tca_enable_epoch};
  const int ud_epoch = epoch;
  d = dbn::updown_finetune(d, splits.train, ud_cfg, uopt, val, rng, [&](const dbn::DbnEpochRecord& r) {
    epoch = ud_epoch + r.epoch;
    emit(r.tca_enabled ? 'u' : 'f', r.mse, r.cond_ll, r.val_err);
  });
  io::save_model(out_path(o, "model.tcam").string(), d);
  return 0;
}

int cmd_train_aec(const Run& run) {
  const Options& o = run.o;
  rng_t rng(o.seed);
  const auto splits = load_splits(o, rng);
  if (o.mixtures < 1) throw invalid_argument("--mixtures must be >= 1");
  std::vector<Eigen::Index> dims{splits.train.dim()};
  for (int w : o.code) dims.push_back(w);
  auto m = ae::make_autoencoder(dims, parse_base_kind(o.base), o.mixtures, rng, o.ae_gain, o.init_spread);

  MetricsCsv csv(out_path(o, "metrics.csv"), run.config_echo);
  std::cout << std::setprecision(6);
  auto on_epoch = [&](const ae::AeEpochRecord& r) {
    csv.row(r.epoch, r.phase, r.train_mse, std::nan(""), std::nan(""));
    std::cout << r.epoch << ' ' << r.phase << ' ' << r.train_mse << '\n';
  };
  ae::AePhaseOptions opt;
  opt.max_epochs = o.ae_max_epochs;
  opt.adam = o.optimizer == "adam";
  ae::AdamState adam;

  opt.freeze_tca = true;
  const int e1 = ae::train_phase(m, splits.train.X, o.batch, o.ae_lr, adam, opt, 'b', 0, rng, on_epoch);
  const double train_frozen = ae::ae_evaluate(m, splits.train.X);
  const double test_frozen = splits.holdout.size() ? ae::ae_evaluate(m, splits.holdout.X) : std::nan("");
  io::save_model(out_path(o, "model_frozen.tcam").string(), m);

  double train_tca = train_frozen, test_tca = test_frozen;
  if (!o.freeze_tca) {
    opt.freeze_tca = false;
    ae::train_phase(m, splits.train.X, o.batch, o.ae_lr, adam, opt, 'c', e1, rng, on_epoch);
    train_tca = ae::ae_evaluate(m, splits.train.X);
    test_tca = splits.holdout.size() ? ae::ae_evaluate(m, splits.holdout.X) : std::nan("");
  }
  io::save_model(out_path(o, "model.tcam").string(), m);

  std::cout << "\nnetwork tca train_mse test_mse\n"
            << "AEC no " << train_frozen << ' ' << test_frozen << '\n';
  if (!o.freeze_tca) std::cout << "AEC yes " << train_tca << ' ' << test_tca << '\n';
  return 0;
}

int cmd_eval(const Run& run) {
  const Options& o = run.o;
  if (o.model.empty()) throw invalid_argument("eval needs --model");
  const auto kind = io::peek_kind(o.model);
  std::cout << std::setprecision(10) << "model " << io::to_string(kind) << '\n';
  if (kind == io::ModelKind::tca) {
    const auto p = io::load_tca(o.model);
    std::cout << "units " << p.units() << "\nmixtures " << p.mixtures() << '\n';
    if (!o.input.empty()) {
      const auto x = pdf::read_samples(o.input);
      const auto target = pdf::parse_target(o.target);
      std::cout << "loglik " << pdf::loglik(p, target, x) << "\nks " << pdf::transformed_ks(p, target, x) << '\n';
    }
    return 0;
  }
  rng_t rng(o.seed);
  const auto splits = load_splits(o, rng);
  const auto& ds = o.split == "train" ? splits.train : splits.holdout;
  if (ds.size() == 0) throw invalid_argument("eval: split '" + o.split + "' is empty");
  std::cout << "split " << o.split << "\nsamples " << ds.size() << '\n';
  switch (kind) {
    case io::ModelKind::rbm: {
      const auto m = io::load_rbm(o.model);
      const auto met = rbm::reconstruction_metrics(m, ds.X);
      std::cout << "mse " << met.mse << "\ncond_ll " << met.cond_ll << '\n';
      break;
    }
    case io::ModelKind::dbn: {
      const auto d = io::load_dbn(o.model);
      const auto r = dbn::dbn_metrics(d, ds.X, &ds, 0, false);
      std::cout << "mse " << r.mse << "\ncond_ll " << r.cond_ll << "\nclass_err " << r.val_err << '\n';
      break;
    }
    case io::ModelKind::aec: {
      const auto m = io::load_aec(o.model);
      std::cout << "mse " << ae::ae_evaluate(m, ds.X) << '\n';
      break;
    }
    case io::ModelKind::tca: break;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trained compound activations: density fits, RBM/DBN and auto-encoder experiments"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "key=value configuration file");
  app.allow_config_extras(CLI::config_extras_mode::error);  // typos in a config file should not pass silently
  app.require_subcommand(1);

  Run run;
  add_options(app, run.o);
  auto* pdf_fit = app.add_subcommand("pdf-fit", "fit a univariate TCA density model")->fallthrough();
  auto* train_rbm = app.add_subcommand("train-rbm", "three-phase RBM training")->fallthrough();
  auto* train_dbn = app.add_subcommand("train-dbn", "layerwise + top + up-down DBN training")->fallthrough();
  auto* train_aec = app.add_subcommand("train-aec", "auto-encoder, TCA frozen then enabled")->fallthrough();
  auto* eval = app.add_subcommand("eval", "evaluate a saved model")->fallthrough();

  CLI11_PARSE(app, argc, argv);
  run.config_echo = app.config_to_str(true, false);

  try {
    if (pdf_fit->parsed()) return cmd_pdf_fit(run);
    if (train_rbm->parsed()) return cmd_train_rbm(run);
    if (train_dbn->parsed()) return cmd_train_dbn(run);
    if (train_aec->parsed()) return cmd_train_aec(run);
    if (eval->parsed()) return cmd_eval(run);
  } catch (const schema_error& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return 3;
  } catch (const version_error& e) {
    std::cerr << "version error: " << e.what() << '\n';
    return 3;
  } catch (const io_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const training_failure& e) {
    std::cerr << "training failed: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
