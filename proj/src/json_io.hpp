#pragma once

#include "nfcast/anfis.hpp"

#include <json.hpp>

namespace nfcast::detail {

nlohmann::ordered_json train_config_json(const TrainConfig &c);
TrainConfig train_config_from(const nlohmann::ordered_json &j);

nlohmann::ordered_json anfis_json(const AnfisModel &m);
AnfisModel anfis_from(const nlohmann::ordered_json &j);

} // namespace nfcast::detail
