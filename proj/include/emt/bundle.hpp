#pragma once

#include <string>
#include <vector>

#include "emt/activation.hpp"
#include "emt/feature_post.hpp"
#include "emt/models.hpp"
#include "emt/nn.hpp"
#include "emt/preprocess.hpp"
#include "emt/torque.hpp"

namespace emt {

// Everything needed to rerun inference: the manifest snapshot, every fitted
// preprocessing statistic, and the trained parameter tensors.
struct RegressorState {
    std::string manifest_text;
    ModelKind kind = ModelKind::Mlp;
    GridCondition grid = GridCondition::B;
    uint64_t seed = 0;
    std::vector<double> weights_kg; // one-hot vocabulary for this grid cell

    ChannelMaxima maxima;
    bool use_activation = false;
    std::vector<ActivationFit> activation; // per channel

    bool has_pre_std = false;
    Standardizer pre_std;
    bool has_pca = false;
    PcaModel pca;
    bool has_post_std = false;
    Standardizer post_std;

    MinMaxScaler target_scaler;
    nn::LossWeights loss_weights;

    uint64_t input_dim = 0; // MLP input width
    uint64_t tcn_t = 0, tcn_c = 0;

    std::vector<std::pair<std::string, std::vector<double>>> tensors;
};

// Single-file binary archive: magic "EMTB", u32 version, little-endian
// payload with length-prefixed fields. Round-trips bit-identically.
void save_bundle(const std::string& path, const RegressorState& state);
RegressorState load_bundle(const std::string& path);

std::string serialize_bundle(const RegressorState& state);
RegressorState deserialize_bundle(const std::string& bytes);

} // namespace emt
