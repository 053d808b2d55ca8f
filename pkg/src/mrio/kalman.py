"""Linear Kalman measurement update in Joseph form."""

import numpy as np


def symmetrize(P):
    return 0.5 * (P + P.T)


def joseph_update(x, P, H, R, nu):
    """Return ``(x_post, P_post, S, K)`` for innovation ``nu``.

    P_post = (I - K H) P (I - K H)^T + K R K^T, which stays PSD even when K
    is not the exact optimal gain.
    """
    S = H @ P @ H.T + R
    K = np.linalg.solve(S.T, (P @ H.T).T).T
    I_KH = np.eye(len(x)) - K @ H
    P_post = I_KH @ P @ I_KH.T + K @ R @ K.T
    return x + K @ nu, symmetrize(P_post), S, K
