// SPDX-License-Identifier: Apache-2.0
#include "sentemb/config_json.hpp"

#include <functional>
#include <map>

#include "sentemb/errors.hpp"

SENTEMB_NAMESPACE_BEGIN

namespace {

using Setter = std::function<void(const Json&, const std::string&)>;

void apply(const Json& j, const std::string& where, const std::map<std::string, Setter>& fields) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError(where + ": unknown key '" + key + "'");
    it->second(value, where + "." + key);
  }
}

Setter size_field(std::size_t& out) {
  return [&out](const Json& v, const std::string& path) {
    if (!v.is_number_unsigned()) throw ConfigError(path + ": expected a non-negative integer");
    out = v.get<std::size_t>();
  };
}

Setter u64_field(std::uint64_t& out) {
  return [&out](const Json& v, const std::string& path) {
    if (!v.is_number_unsigned()) throw ConfigError(path + ": expected a non-negative integer");
    out = v.get<std::uint64_t>();
  };
}

Setter real_field(double& out) {
  return [&out](const Json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path + ": expected a number");
    out = v.get<double>();
  };
}

Setter bool_field(bool& out) {
  return [&out](const Json& v, const std::string& path) {
    if (!v.is_boolean()) throw ConfigError(path + ": expected true or false");
    out = v.get<bool>();
  };
}

}  // namespace

Json to_json(const EncoderConfig& c) {
  return Json{{"vocab_size", c.vocab_size},
              {"embed_dim", c.embed_dim},
              {"hidden_dim", c.hidden_dim},
              {"layers", c.layers},
              {"heads", c.heads},
              {"ffn_dim", c.ffn_dim},
              {"max_len", c.max_len},
              {"factorized_embedding", c.factorized_embedding},
              {"share_layers", c.share_layers},
              {"num_hidden_groups", c.num_hidden_groups},
              {"dropout_rate", c.dropout_rate},
              {"seed", c.seed}};
}

Json to_json(const PoolingConfig& c) {
  return Json{{"kind", to_string(c.kind)}, {"cnn", Json{{"blocks", c.cnn.blocks}, {"kernel", c.cnn.kernel}}}};
}

Json to_json(const TrainConfig& c) {
  return Json{{"base_lr", c.base_lr},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"warmup_fraction", c.warmup_fraction},
              {"adam", Json{{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
              {"seed", c.seed},
              {"shuffle", c.shuffle},
              {"max_grad_norm", c.max_grad_norm}};
}

Json to_json(const TokenizerOptions& c) { return Json{{"max_len", c.max_len}, {"lowercase", c.lowercase}}; }

void read_json(const Json& j, EncoderConfig& c, const std::string& where) {
  apply(j, where,
        {{"vocab_size", size_field(c.vocab_size)},
         {"embed_dim", size_field(c.embed_dim)},
         {"hidden_dim", size_field(c.hidden_dim)},
         {"layers", size_field(c.layers)},
         {"heads", size_field(c.heads)},
         {"ffn_dim", size_field(c.ffn_dim)},
         {"max_len", size_field(c.max_len)},
         {"factorized_embedding", bool_field(c.factorized_embedding)},
         {"share_layers", bool_field(c.share_layers)},
         {"num_hidden_groups", size_field(c.num_hidden_groups)},
         {"dropout_rate", real_field(c.dropout_rate)},
         {"seed", u64_field(c.seed)}});
}

void read_json(const Json& j, PoolingConfig& c, const std::string& where) {
  apply(j, where,
        {{"kind",
          [&c](const Json& v, const std::string& path) {
            if (!v.is_string()) throw ConfigError(path + ": expected one of cls, mean, max, cnn");
            c.kind = parse_pooling_kind(v.get<std::string>());
          }},
         {"cnn", [&c](const Json& v, const std::string& path) {
            apply(v, path, {{"blocks", size_field(c.cnn.blocks)}, {"kernel", size_field(c.cnn.kernel)}});
          }}});
}

void read_json(const Json& j, TrainConfig& c, const std::string& where) {
  apply(j, where,
        {{"base_lr", real_field(c.base_lr)},
         {"batch_size", size_field(c.batch_size)},
         {"epochs", size_field(c.epochs)},
         {"warmup_fraction", real_field(c.warmup_fraction)},
         {"adam",
          [&c](const Json& v, const std::string& path) {
            apply(v, path,
                  {{"beta1", real_field(c.adam.beta1)},
                   {"beta2", real_field(c.adam.beta2)},
                   {"eps", real_field(c.adam.eps)}});
          }},
         {"seed", u64_field(c.seed)},
         {"shuffle", bool_field(c.shuffle)},
         {"max_grad_norm", real_field(c.max_grad_norm)}});
}

void read_json(const Json& j, TokenizerOptions& c, const std::string& where) {
  apply(j, where, {{"max_len", size_field(c.max_len)}, {"lowercase", bool_field(c.lowercase)}});
}

SENTEMB_NAMESPACE_END
