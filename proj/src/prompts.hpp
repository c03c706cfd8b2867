#pragma once

#include <string_view>

namespace srrg::prompts {

extern const std::string_view kStructuringPrefix;
extern const std::string_view kDiseasePrefix;
extern const std::string_view kDiseaseSuffix;

}  // namespace srrg::prompts
