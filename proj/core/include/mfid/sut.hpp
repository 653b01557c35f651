#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mfid/numerics.hpp"
#include "mfid/rng.hpp"
#include "mfid/scene.hpp"

namespace mfid {

enum class SutKind { steering, segmentation };
enum class SutTask { steer, drivable, lane };

enum class LayerKind : uint32_t {
    conv3x3 = 1,
    relu = 2,
    global_avg_pool = 3,
    dense = 4,
    sigmoid = 5,
    conv1x1 = 6,
    upsample_bilinear = 7,
};

struct LayerSpec {
    LayerKind kind;
    int in_c = 0, out_c = 0, stride = 1;  // conv3x3 / conv1x1
    int in_dim = 0, out_dim = 0;          // dense
    int factor = 1;                       // upsample
};

// A frozen network F. Weights are float32 (the on-disk representation);
// forward/backward run through the templated math in sut_math.hpp so the
// same code can be instantiated at double precision for verification.
struct ReferenceSut {
    SutKind kind = SutKind::steering;
    std::string id;
    int in_h = kImageSize, in_w = kImageSize, in_c = 3;
    std::vector<LayerSpec> layers;
    std::vector<std::vector<float>> weights;   // empty for weightless layers
    std::vector<int> taps;                     // layer indices, post-activation
    std::vector<std::array<int, 3>> shapes;    // [0]=input, [i+1]=layer i output (c,h,w)

    void finalize();  // computes shapes, validates layer chain
    size_t weight_count(int layer) const;
    uint32_t weight_checksum() const;
    std::string arch_string() const;
    uint64_t id_hash() const;  // over arch + weights; cache key component
    int output_dim() const;
};

struct SutOutput {
    SutKind kind;
    std::vector<float> values;  // steering: 1 angle (rad); segmentation: H*W logits
};

struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<float> data;
};
using LayerActivations = std::map<int, Tensor>;

struct PixelGrad {
    int h = 0, w = 0, c = 0;
    std::vector<float> g;  // HWC
    float at(int y, int x, int ch) const {
        return g[(static_cast<size_t>(y) * w + x) * c + ch];
    }
};

SutOutput forward(const ReferenceSut& sut, const Image& x);
std::pair<SutOutput, LayerActivations> forward_with_taps(const ReferenceSut& sut, const Image& x);

// Scalar objective over the output vector: returns the value and writes
// d(value)/d(out) into dout.
using OutputObjective = std::function<double(std::span<const float> out, std::span<float> dout)>;

// Exact reverse-mode gradient of the objective w.r.t. the input pixels.
PixelGrad input_gradient(const ReferenceSut& sut, const Image& x, const OutputObjective& obj);

// Same architecture, freshly sampled weights; the original is untouched.
ReferenceSut randomize_weights(const ReferenceSut& sut, Rng& rng);

// Architectures ------------------------------------------------------------

ReferenceSut make_steering_sut();
ReferenceSut make_segmentation_sut();
// 1-output linear SUT whose weights are nonzero only inside `patch`
// (all channels), for explainer ground-truth checks.
ReferenceSut make_planted_sut(const IntRect& patch, float weight);

// Reference training (one-time; the result is frozen) -----------------------

struct TrainRecipe {
    int steps = 2000;
    int batch = 16;
    float lr = 1e-3f;
    int train_images = 1000;
    uint64_t seed = 42;
};

ReferenceSut train_reference_sut(SutTask task, const TrainRecipe& recipe = {});

// Held-out diagnostics used by tests and the pipeline.
double eval_steering_mae(const ReferenceSut& sut, int n_images, uint64_t seed);
double eval_segmentation_iou(const ReferenceSut& sut, SutTask task, int n_images, uint64_t seed);

// Weight file: magic "MFWT", header, per-layer shapes + float32 weights,
// trailing CRC32.
void save_sut(const ReferenceSut& sut, const std::filesystem::path& path);
ReferenceSut load_sut(const std::filesystem::path& path);

// Loads `path` when present, otherwise trains with `recipe` and saves.
// Training is deterministic, so the two routes yield identical weights.
ReferenceSut load_or_train_sut(SutTask task, const std::filesystem::path& path,
                               const TrainRecipe& recipe = {});

const char* sut_task_name(SutTask task);

}  // namespace mfid
