#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "plabel/random.hpp"

namespace plabel {

enum class LabelStrategy { hard, soft, probabilistic, regularized };

std::string_view to_string(LabelStrategy s);
LabelStrategy parse_label_strategy(std::string_view name);

struct TrainConfig {
    double learning_rate = 0.1;
    std::size_t epochs = 100;
    std::size_t batch_size = 32;   // 0 means full batch
    double lambda = 0.0;
    double epsilon_smoothing = 0.1;
    double weight_decay = 0.0;
    Seed seed{0};
    double convergence_tol = 0.0;  // stop when |delta epoch loss| < tol; 0 disables
    LabelStrategy label_strategy = LabelStrategy::hard;

    // throws ConfigError on learning_rate <= 0, epochs == 0, lambda < 0
    void validate() const;
};

}  // namespace plabel
