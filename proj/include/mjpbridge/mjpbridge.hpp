#ifndef MJPBRIDGE_MJPBRIDGE_HPP
#define MJPBRIDGE_MJPBRIDGE_HPP

#include "mjpbridge/bench.hpp"
#include "mjpbridge/bridge.hpp"
#include "mjpbridge/dataset.hpp"
#include "mjpbridge/gillespie.hpp"
#include "mjpbridge/inference.hpp"
#include "mjpbridge/io.hpp"
#include "mjpbridge/lna.hpp"
#include "mjpbridge/models.hpp"
#include "mjpbridge/network.hpp"
#include "mjpbridge/ode.hpp"

#endif
