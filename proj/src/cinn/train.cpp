#include "cinnrl/cinn/train.hpp"

#include "cinnrl/error.hpp"
#include "cinnrl/numkit/random.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace cinnrl::cinn {

namespace {

struct Normalized {
  Matrix s, a, s_next;
};

Normalized normalize(const Scaling& sc, const Transitions& d) {
  return {sc.state.apply(d.s), sc.action.apply(d.a), sc.state.apply(d.s_next)};
}

Losses evaluate(const BidirectionalModel& model, const Normalized& d) {
  const Var f = model.forward(num::constant(d.s), num::constant(d.a), false);
  const Var i = model.inverse(num::constant(d.s), num::constant(d.s_next), false);
  return {(f.value() - d.s_next).array().square().mean(), (i.value() - d.a).array().square().mean()};
}

}  // namespace

Losses loss_bidirectional(const BidirectionalModel& model, const Transitions& data) {
  if (data.size() == 0) throw ShapeError("loss_bidirectional: empty batch");
  return evaluate(model, normalize(model.scaling, data));
}

std::vector<EpochRecord> train_bidirectional(BidirectionalModel& model, const Transitions& train,
                                             const std::vector<Transitions>& tests,
                                             const TrainConfig& cfg,
                                             const std::function<void(const EpochRecord&)>& on_epoch) {
  if (train.size() == 0) throw ShapeError("train_bidirectional: empty training set");
  if (cfg.batch < 1) throw Error("train_bidirectional: batch must be >= 1");
  if (!(cfg.lr > 0.0)) throw Error("train_bidirectional: lr must be > 0");

  const Normalized data = normalize(model.scaling, train);
  std::vector<Normalized> test_data;
  for (const Transitions& t : tests) test_data.push_back(normalize(model.scaling, t));

  num::Adam adam(model.parameters(), {.lr = cfg.lr});
  num::Rng rng(num::derive_seed(cfg.seed, "batches"));
  std::vector<Index> order(static_cast<std::size_t>(train.size()));
  std::iota(order.begin(), order.end(), Index{0});

  std::vector<EpochRecord> history;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double progress = cfg.epochs > 1 ? static_cast<double>(epoch - 1) / (cfg.epochs - 1) : 0.0;
    const double f = cfg.final_lr_fraction;
    adam.set_lr(cfg.lr * (f + (1.0 - f) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress))));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    try {
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
        const std::vector<Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
        const Var s = num::constant(data.s(idx, Eigen::all));
        const Var a = num::constant(data.a(idx, Eigen::all));
        const Var s_next = num::constant(data.s_next(idx, Eigen::all));

        const Var lf = num::mean(num::square(model.forward(s, a, true) - s_next));
        num::backward(lf);
        const Var li = num::mean(num::square(model.inverse(s, s_next, true) - a));
        num::backward(li);
        if (!std::isfinite(lf.scalar()) || !std::isfinite(li.scalar())) {
          throw NumericError("non-finite loss");
        }
        adam.step();
      }
    } catch (const NumericError& ex) {
      throw DivergenceError("training diverged in epoch " + std::to_string(epoch) + ": " + ex.what(), epoch);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train = evaluate(model, data);
    for (const Normalized& t : test_data) rec.test.push_back(evaluate(model, t));
    if (!std::isfinite(rec.train.total())) {
      throw DivergenceError("training diverged in epoch " + std::to_string(epoch), epoch);
    }
    if (on_epoch) on_epoch(rec);
    history.push_back(std::move(rec));
  }
  return history;
}

}  // namespace cinnrl::cinn
