# Biblioteca de búsqueda en árboles con bandidos: árbol, entornos, políticas, motor, árbol creciente y análisis
