// Short gated training run on the emergency-brake scenario. Prints every gate
// decision, then compares the final policy (mean actions) with the rule
// planner on 20 matched-seed episodes.
//
//   gate_walkthrough [cycles=40] [seed=1]

#include <cstdint>
#include <cstdio>
#include <string>

#include "hcpi/trainer/config.hpp"
#include "hcpi/trainer/evaluate.hpp"
#include "hcpi/trainer/trainer.hpp"

using namespace hcpi;
using namespace hcpi::trainer;

int main(int argc, char** argv) {
  const int cycles = argc > 1 ? std::stoi(argv[1]) : 40;
  const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 1;

  TrainerConfig cfg;
  cfg.seed = seed;
  cfg.max_cycles = cycles;
  Trainer trainer(cfg);

  std::printf("%5s %9s %4s %9s %9s %8s %8s\n", "cycle", "m_paper", "tag", "rho_lower", "rho_cur", "verdict", "success");
  trainer.run([](const IterationReport& r) {
    const auto& d = *r.decision;
    std::printf("%5d %9.0f %4lld %9.4f %9.4f %8s %8.2f\n", r.cycle, r.m_paper, static_cast<long long>(r.policy_tag),
                d.rho_lower, d.rho_cur, d.accepted ? "accept" : "reject", r.current_success);
  });

  const auto spec = cfg.scenario_spec();
  const auto bounds = cfg.bounds();
  const std::uint64_t root = trainer.evaluation_root();
  const auto learned = evaluate_mean(trainer.current(), cfg.env, spec, 20, root, cfg.update.gamma, bounds);
  const auto rule = evaluate_rule(cfg.env, spec, 20, root, cfg.update.gamma, bounds);
  std::printf("\n%-8s %8s %10s %10s\n", "policy", "success", "return", "speed");
  std::printf("%-8s %8.2f %10.1f %10.2f\n", "learned", learned.success_rate, learned.mean_return, learned.average_speed);
  std::printf("%-8s %8.2f %10.1f %10.2f\n", "rule", rule.success_rate, rule.mean_return, rule.average_speed);
  return 0;
}
