// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "json.hpp"
#include "sentemb/encoder.hpp"
#include "sentemb/pooling.hpp"
#include "sentemb/training.hpp"
#include "sentemb/vocab.hpp"

SENTEMB_NAMESPACE_BEGIN

using Json = nlohmann::ordered_json;

Json to_json(const EncoderConfig& c);
Json to_json(const PoolingConfig& c);
Json to_json(const TrainConfig& c);
Json to_json(const TokenizerOptions& c);

// Each reader overwrites the fields present in `j` and keeps the others.
// Unknown keys and wrongly typed values raise ConfigError naming `where`.
void read_json(const Json& j, EncoderConfig& c, const std::string& where = "encoder");
void read_json(const Json& j, PoolingConfig& c, const std::string& where = "head");
void read_json(const Json& j, TrainConfig& c, const std::string& where = "train");
void read_json(const Json& j, TokenizerOptions& c, const std::string& where = "tokenizer");

SENTEMB_NAMESPACE_END
