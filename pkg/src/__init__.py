"""
suris-lab

Интегрируемое стандартное отображение Суриса: первые интегралы, инвариантные
кривые, угловые карты, деформированный базис Фурье, периодические орбиты и
численные эксперименты локальной жесткости.
"""

__version__ = "1.0.0"
__author__ = "Студенческий проект"
