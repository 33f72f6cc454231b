#include <math.h>
#include <stdio.h>
#include "qortho.h"

int main(void) {
    QorthoParams p = {0};
    p.q = 0.5;
    QorthoFamily *h = NULL;
    if (qortho_family_new(QORTHO_FAMILY_KIND_Q_HERMITE, p, &h) != QORTHO_STATUS_OK) return 1;
    double v = 0.0;
    if (qortho_family_eval(h, 3, 1.0, &v) != QORTHO_STATUS_OK) return 2;
    qortho_family_free(h);
    if (fabs(v + 1.5) > 1e-15) return 3;

    p.q = 1.5;
    if (qortho_family_new(QORTHO_FAMILY_KIND_Q_HERMITE, p, &h) != QORTHO_STATUS_OUT_OF_RANGE) return 4;
    if (qortho_last_error() == NULL) return 5;

    double row[3];
    if (qortho_connection_row(QORTHO_PAIR_KIND_CHEB_T_FROM_U, p, 2, row, 3) != QORTHO_STATUS_OK) return 6;
    if (row[0] != -0.5 || row[1] != 0.0 || row[2] != 0.5) return 7;
    printf("ok\n");
    return 0;
}
