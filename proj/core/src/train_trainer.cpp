#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <utility>

#include "gcil/nn/loss.hpp"
#include "gcil/train/trainer.hpp"

namespace gcil::train {

std::array<std::size_t, kNumCommands> batch_split(std::size_t batch_size, std::uint64_t step) {
  const std::size_t base = batch_size / kNumCommands;
  const std::size_t extra = batch_size % kNumCommands;
  std::array<std::size_t, kNumCommands> counts;
  counts.fill(base);
  // The extra samples go to the commands after the rotating one.
  for (std::size_t i = 0; i < extra; ++i) counts[(step + 1 + i) % kNumCommands] += 1;
  return counts;
}

Minibatch sample_minibatch(const std::array<std::size_t, kNumCommands>& buffer_sizes,
                           std::size_t batch_size, std::uint64_t step, Rng& rng) {
  if (batch_size < kNumCommands) throw TrainError("batch_size must be at least 3");
  for (Command c : kAllCommands)
    if (buffer_sizes[index_of(c)] == 0)
      throw TrainError("empty " + std::string(to_string(c)) + " buffer");
  Minibatch mb;
  mb.counts = batch_split(batch_size, step);
  mb.indices.reserve(batch_size);
  mb.commands.reserve(batch_size);
  for (Command c : kAllCommands) {
    const auto k = index_of(c);
    for (std::size_t i = 0; i < mb.counts[k]; ++i) {
      mb.indices.push_back(rng.index(buffer_sizes[k]));
      mb.commands.push_back(c);
    }
  }
  return mb;
}

void write_loss_header(std::ostream& out) {
  out << "step,mean_loss,loss_forward,loss_left,loss_right,wall_clock_s\n";
}

void write_loss_row(std::ostream& out, const LossRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%.17g,%.3f\n",
                static_cast<unsigned long long>(r.step), r.mean_loss, r.command_loss[0],
                r.command_loss[1], r.command_loss[2], r.wall_clock_s);
  out << buf;
}

std::array<std::size_t, kNumCommands> EncodedDataset::sizes() const {
  std::array<std::size_t, kNumCommands> s{};
  for (std::size_t k = 0; k < kNumCommands; ++k) s[k] = observations[k].size();
  return s;
}

std::size_t EncodedDataset::size() const {
  std::size_t n = 0;
  for (const auto& o : observations) n += o.size();
  return n;
}

EncodedDataset encode_dataset(const expert::DemoDataset& dataset, const graph::GraphConfig& graph) {
  EncodedDataset out;
  for (std::size_t k = 0; k < kNumCommands; ++k) {
    for (const auto& s : dataset.buffers[k]) {
      const auto positions = graph::positions_from_features(s.observation.features);
      out.observations[k].push_back(
          {s.observation.features, graph::build_adjacency(positions, graph)});
      out.targets[k].push_back(s.u_star);
    }
  }
  return out;
}

Trainer::Trainer(const EncodedDataset& data, TrainConfig config)
    : data_(&data),
      config_(std::move(config)),
      net_(policy::PolicyNetwork::make(config_.network, derive_seed(config_.seed, 0), config_.shape)),
      grads_(net_.zeros_like()),
      adam_(config_.adam),
      rng_(derive_seed(config_.seed, 1)) {}

Trainer::Trainer(const EncodedDataset& data, TrainConfig config, const Checkpoint& resume)
    : data_(&data),
      config_(std::move(config)),
      net_(resume.network),
      grads_(net_.zeros_like()),
      adam_(resume.adam_config),
      rng_(0),
      step_(resume.step) {
  if (net_.kind() != config_.network)
    throw TrainError("checkpoint holds a " + std::string(policy::to_string(net_.kind())) +
                     " network but " + std::string(policy::to_string(config_.network)) +
                     " was requested");
  if (resume.seed != config_.seed) throw TrainError("checkpoint seed differs from the config seed");
  config_.adam = resume.adam_config;
  adam_.restore(resume.adam_steps, resume.adam_m, resume.adam_v);
  rng_.set_state(resume.rng_state);
}

std::size_t Trainer::steps_per_epoch() const {
  const std::size_t n = data_->size();
  return std::max<std::size_t>(1, (n + config_.batch_size - 1) / config_.batch_size);
}

std::size_t Trainer::total_steps() const {
  return config_.max_steps > 0 ? config_.max_steps : config_.epochs * steps_per_epoch();
}

LossRecord Trainer::train_step() {
  const Minibatch mb = sample_minibatch(data_->sizes(), config_.batch_size, step_, rng_);
  const std::size_t b = mb.indices.size();
  std::vector<const policy::Observation*> obs(b);
  nn::Tensor2 target(b, 2);
  for (std::size_t i = 0; i < b; ++i) {
    const auto k = index_of(mb.commands[i]);
    obs[i] = &data_->observations[k][mb.indices[i]];
    const Action& u = data_->targets[k][mb.indices[i]];
    target(i, 0) = u.delta;
    target(i, 1) = u.tau;
  }

  auto fwd = net_.forward(obs, mb.commands);
  const auto loss = nn::action_loss(fwd.actions, target);

  LossRecord rec;
  rec.step = step_ + 1;
  rec.mean_loss = loss.loss;
  std::array<double, kNumCommands> sums{};
  for (std::size_t i = 0; i < b; ++i)
    sums[index_of(mb.commands[i])] += nn::sample_loss(fwd.actions(i, 0), fwd.actions(i, 1),
                                                      target(i, 0), target(i, 1));
  for (std::size_t k = 0; k < kNumCommands; ++k)
    rec.command_loss[k] = mb.counts[k] > 0 ? sums[k] / static_cast<double>(mb.counts[k]) : 0.0;
  if (!std::isfinite(loss.loss))
    throw TrainError("non-finite loss at step " + std::to_string(rec.step));

  grads_.zero();
  net_.backward(fwd.cache, loss.grad, grads_);
  const auto grads = std::as_const(grads_).parameters();
  const auto params = net_.parameters();
  adam_.step(params, grads);
  ++step_;
  return rec;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.network = net_;
  c.graph = config_.graph;
  c.adam_config = adam_.config();
  c.adam_steps = adam_.steps();
  c.adam_m = adam_.first_moments();
  c.adam_v = adam_.second_moments();
  c.step = step_;
  c.seed = config_.seed;
  c.rng_state = rng_.state();
  return c;
}

TrainRun train(const expert::DemoDataset& dataset, const TrainConfig& config,
               const TrainOptions& options) {
  const EncodedDataset data = encode_dataset(dataset, config.graph);
  return train(data, config, options);
}

TrainRun train(const EncodedDataset& data, const TrainConfig& config, const TrainOptions& options) {
  Trainer trainer = options.resume ? Trainer(data, config, *options.resume) : Trainer(data, config);
  const auto start = std::chrono::steady_clock::now();
  TrainRun run;

  std::ofstream loss_csv;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    const auto path = *options.out_dir / "loss.csv";
    const bool append = options.resume && std::filesystem::exists(path);
    loss_csv.open(path, append ? std::ios::app : std::ios::trunc);
    if (!loss_csv) throw TrainError("cannot write " + path.string());
    if (!append) write_loss_header(loss_csv);
  }
  auto save = [&](const std::string& name) {
    if (!options.out_dir) return;
    const auto path = *options.out_dir / name;
    checkpoint_save(trainer.checkpoint(), path);
    run.checkpoints.push_back(path);
  };

  while (!trainer.done()) {
    LossRecord rec;
    try {
      rec = trainer.train_step();
    } catch (const TrainError&) {
      save("diagnostic.json");
      throw;
    }
    rec.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (loss_csv.is_open()) write_loss_row(loss_csv, rec);
    run.history.push_back(rec);
    if (options.log && options.log_every > 0 &&
        (rec.step % options.log_every == 0 || trainer.done())) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "step %llu/%zu loss %.6f (%.1fs)\n",
                    static_cast<unsigned long long>(rec.step), trainer.total_steps(), rec.mean_loss,
                    rec.wall_clock_s);
      *options.log << buf << std::flush;
    }
    if (config.eval_every > 0 && rec.step % config.eval_every == 0 && !trainer.done())
      save("checkpoint_" + std::to_string(rec.step) + ".json");
  }
  save("final.json");
  run.steps = trainer.step();
  run.final_state = trainer.checkpoint();
  run.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

}  // namespace gcil::train
