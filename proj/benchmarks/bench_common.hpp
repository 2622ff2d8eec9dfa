#pragma once

#include "dmimo/rates.hpp"
#include "dmimo/topology.hpp"

namespace dmimo::bench {

struct DeskInstance {
  Layout layout;
  LinkGainMap gains;

  explicit DeskInstance(int users_per_white = 5, int users_per_shaded = 30) {
    CheckerboardConfig cfg = desk_checkerboard();
    cfg.picos_per_shaded = 3;
    cfg.users_per_white = users_per_white;
    cfg.users_per_shaded = users_per_shaded;
    layout = build_checkerboard(cfg, 1);
    gains = compute_link_gains(layout.stations, layout.users, layout.extent_m,
                               GainConfig{}, 2);
  }
};

}  // namespace dmimo::bench
