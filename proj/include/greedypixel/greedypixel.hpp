#pragma once

// Umbrella header: the whole library.

#include "greedypixel/attack.hpp"
#include "greedypixel/error.hpp"
#include "greedypixel/gradient_check.hpp"
#include "greedypixel/image.hpp"
#include "greedypixel/image_io.hpp"
#include "greedypixel/metrics.hpp"
#include "greedypixel/model.hpp"
#include "greedypixel/nets.hpp"
#include "greedypixel/oracle.hpp"
#include "greedypixel/pgd.hpp"
#include "greedypixel/priority_map.hpp"
#include "greedypixel/remote.hpp"
#include "greedypixel/rng.hpp"
#include "greedypixel/serialize.hpp"
#include "greedypixel/serve.hpp"
#include "greedypixel/synthetic.hpp"
