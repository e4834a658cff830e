#include <stdio.h>
#include <string.h>

#include "marun.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        MarunStatus s_ = (call);                                           \
        if (s_ != MARUN_STATUS_OK) {                                       \
            fprintf(stderr, "%s -> %d: %s\n", #call, s_, marun_last_error()); \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    MarunSim *sim = NULL;
    CHECK(marun_sim_new_default(0.02, &sim));
    CHECK(marun_sim_publish(sim, "/ursula/limb/0/cmd", "{\"axes\":[1,0]}"));
    CHECK(marun_sim_step(sim, 50));

    double t = 0.0;
    CHECK(marun_sim_time(sim, &t));
    if (t < 0.999 || t > 1.001) {
        fprintf(stderr, "time %f\n", t);
        return 1;
    }

    double xyz[3 * 64];
    size_t n = 0;
    CHECK(marun_sim_limb_segments(sim, 0, xyz, sizeof xyz / sizeof xyz[0], &n));

    char hash[MARUN_HASH_BUFFER_LEN];
    CHECK(marun_sim_state_hash(sim, hash, sizeof hash));

    if (marun_sim_publish(sim, "/ursula/vehicle/odom", "{}") != MARUN_STATUS_COMMAND) {
        return 1;
    }
    if (strlen(marun_last_error()) == 0) {
        return 1;
    }
    marun_sim_free(sim);
    printf("segments=%zu hash=%s\n", n, hash);
    return 0;
}
