#pragma once

#include <string_view>

namespace srrg::bundled {

extern const std::string_view kTaxonomyJson;
extern const std::string_view kChexbertMappingJson;
extern const std::string_view kKeywordLexiconJson;

}  // namespace srrg::bundled
