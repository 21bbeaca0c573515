#pragma once

#include <stdexcept>
#include <string>

namespace viewrank {

/// Invalid configuration value. `field` names the offending member, dotted
/// for nested structs ("model.fc_hidden").
class InvalidField : public std::invalid_argument {
 public:
  InvalidField(std::string field, std::string reason)
      : std::invalid_argument(field + ": " + reason), field_(std::move(field)), reason_(std::move(reason)) {}
  const std::string& field() const { return field_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

}  // namespace viewrank
