#pragma once

#include "lidisco/dataio.hpp"
#include "lidisco/eval.hpp"
#include "lidisco/selftrain.hpp"
#include "lidisco/synth.hpp"

namespace lidisco {

// JSON <-> parameter structs. Readers start from the defaults, override the keys that
// are present and reject unknown keys with Error(InvalidConfig).

Json to_json(const PipelineParams& p);
PipelineParams pipeline_params_from_json(const Json& j);

Json to_json(const RoundConfig& c);
RoundConfig round_config_from_json(const Json& j);

Json to_json(const SceneConfig& c);
SceneConfig scene_config_from_json(const Json& j);

Json to_json(const EvalParams& p);
EvalParams eval_params_from_json(const Json& j);

}  // namespace lidisco
