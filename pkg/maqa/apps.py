from django.apps import AppConfig


class MaqaConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'maqa'
