# Frentes de onda biestables en ecuaciones de reacción-difusión con retardo
