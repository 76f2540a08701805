"""pglqr: otimização de políticas para o LQR em tempo contínuo"""
